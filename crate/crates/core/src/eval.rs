//! Name binding and evaluation of expressions, predicates and projections
//! over positional rows. Shared by the storage engine and the rewriter.

use std::cmp::Ordering;

use rust_decimal::Decimal as RawDecimal;

use crate::sql::ast::{AggregateFunc, BinaryOp, ColumnRef, CompareOp, Expr, Literal, Predicate};
use crate::sql::render::render_expr;
use crate::types::{Decimal, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BindError {
    #[error("unknown table {0}")]
    UnknownTable(String),
    #[error("unknown column {0}")]
    UnknownColumn(String),
    #[error("ambiguous column {0}")]
    AmbiguousColumn(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("type mismatch: {left} {op} {right}")]
    TypeMismatch { op: String, left: &'static str, right: &'static str },
    #[error("integer overflow in {0}")]
    Overflow(String),
    #[error("aggregate {0} not allowed here")]
    MisplacedAggregate(&'static str),
}

/// An expression whose column references are resolved to row positions.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundExpr {
    Column(usize),
    Literal(Value),
    Neg(Box<BoundExpr>),
    Binary { op: BinaryOp, left: Box<BoundExpr>, right: Box<BoundExpr> },
    Aggregate { func: AggregateFunc, arg: Option<Box<BoundExpr>> },
    /// Result of the n-th aggregate of a projection; only produced by [`Projection`].
    Slot(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundPredicate {
    And(Box<BoundPredicate>, Box<BoundPredicate>),
    Or(Box<BoundPredicate>, Box<BoundPredicate>),
    Compare { left: BoundExpr, op: CompareOp, right: BoundExpr },
    Like { expr: BoundExpr, pattern: BoundExpr, negated: bool },
}

pub fn literal_value(l: &Literal) -> Value {
    match l {
        Literal::Integer(v) => Value::Integer(*v),
        Literal::Decimal(d) => Value::Decimal(*d),
        Literal::Str(s) => Value::Text(s.clone()),
        Literal::Date(s) => Value::Date(s.clone()),
        Literal::Null => Value::Null,
    }
}

/// Columns visible at one query level: `(binding, name)` pairs in input order.
#[derive(Debug, Clone, Default)]
pub struct Scope {
    columns: Vec<(String, String)>,
}

impl Scope {
    pub fn new() -> Scope {
        Scope::default()
    }

    pub fn push(&mut self, binding: &str, names: impl IntoIterator<Item = impl Into<String>>) {
        for n in names {
            self.columns.push((binding.to_string(), n.into()));
        }
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.columns[idx].1
    }

    pub fn binding(&self, idx: usize) -> &str {
        &self.columns[idx].0
    }

    pub fn resolve(&self, c: &ColumnRef) -> Result<usize, BindError> {
        let mut hits = self
            .columns
            .iter()
            .enumerate()
            .filter(|(_, (b, n))| *n == c.name && c.qualifier.as_ref().map_or(true, |q| q == b))
            .map(|(i, _)| i);
        let display = || match &c.qualifier {
            Some(q) => format!("{q}.{}", c.name),
            None => c.name.clone(),
        };
        let first = hits.next().ok_or_else(|| BindError::UnknownColumn(display()))?;
        if hits.next().is_some() {
            return Err(BindError::AmbiguousColumn(display()));
        }
        Ok(first)
    }
}

/// Resolves names against a [`Scope`] whose columns stand for the given expressions.
pub struct Binder<'a> {
    pub scope: &'a Scope,
    /// Expression each scope column denotes; `None` means the identity `Column(i)`.
    pub targets: Option<&'a [BoundExpr]>,
}

impl<'a> Binder<'a> {
    pub fn identity(scope: &'a Scope) -> Binder<'a> {
        Binder { scope, targets: None }
    }

    fn target(&self, idx: usize) -> BoundExpr {
        match self.targets {
            Some(t) => t[idx].clone(),
            None => BoundExpr::Column(idx),
        }
    }

    pub fn column(&self, c: &ColumnRef) -> Result<BoundExpr, BindError> {
        self.scope.resolve(c).map(|i| self.target(i))
    }

    pub fn expr(&self, e: &Expr) -> Result<BoundExpr, BindError> {
        Ok(match e {
            Expr::Column(c) => self.column(c)?,
            Expr::Literal(l) => BoundExpr::Literal(literal_value(l)),
            Expr::Neg(inner) => BoundExpr::Neg(Box::new(self.expr(inner)?)),
            Expr::Binary { op, left, right } => {
                BoundExpr::Binary { op: *op, left: Box::new(self.expr(left)?), right: Box::new(self.expr(right)?) }
            }
            Expr::Aggregate { func, arg } => BoundExpr::Aggregate {
                func: *func,
                arg: match arg {
                    Some(a) => Some(Box::new(self.expr(a)?)),
                    None => None,
                },
            },
        })
    }

    pub fn predicate(&self, p: &Predicate) -> Result<BoundPredicate, BindError> {
        Ok(match p {
            Predicate::And(l, r) => BoundPredicate::And(Box::new(self.predicate(l)?), Box::new(self.predicate(r)?)),
            Predicate::Or(l, r) => BoundPredicate::Or(Box::new(self.predicate(l)?), Box::new(self.predicate(r)?)),
            Predicate::Compare { left, op, right } => {
                BoundPredicate::Compare { left: self.expr(left)?, op: *op, right: self.expr(right)? }
            }
            Predicate::Like { expr, pattern, negated } => {
                BoundPredicate::Like { expr: self.expr(expr)?, pattern: self.expr(pattern)?, negated: *negated }
            }
        })
    }
}

/// Output column name of a projection item: its alias, the bare column name,
/// or the rendered expression text.
pub fn output_name(expr: &Expr, alias: Option<&str>) -> String {
    match (alias, expr) {
        (Some(a), _) => a.to_string(),
        (None, Expr::Column(c)) => c.name.clone(),
        (None, e) => render_expr(e),
    }
}

struct Ctx<'a> {
    row: Option<&'a [Value]>,
    slots: &'a [Value],
}

impl BoundExpr {
    pub fn eval(&self, row: &[Value]) -> Result<Value, EvalError> {
        self.eval_in(&Ctx { row: Some(row), slots: &[] })
    }

    fn eval_in(&self, ctx: &Ctx<'_>) -> Result<Value, EvalError> {
        match self {
            BoundExpr::Column(i) => Ok(match ctx.row {
                Some(r) => r[*i].clone(),
                None => Value::Null,
            }),
            BoundExpr::Literal(v) => Ok(v.clone()),
            BoundExpr::Neg(e) => negate(e.eval_in(ctx)?),
            BoundExpr::Binary { op, left, right } => arith(*op, left.eval_in(ctx)?, right.eval_in(ctx)?),
            BoundExpr::Aggregate { func, .. } => Err(EvalError::MisplacedAggregate(func.name())),
            BoundExpr::Slot(i) => Ok(ctx.slots[*i].clone()),
        }
    }

    /// Highest column position referenced, if any.
    pub fn max_column(&self) -> Option<usize> {
        match self {
            BoundExpr::Column(i) => Some(*i),
            BoundExpr::Literal(_) | BoundExpr::Slot(_) => None,
            BoundExpr::Neg(e) => e.max_column(),
            BoundExpr::Binary { left, right, .. } => left.max_column().max(right.max_column()),
            BoundExpr::Aggregate { arg, .. } => arg.as_ref().and_then(|a| a.max_column()),
        }
    }

    pub fn contains_aggregate(&self) -> bool {
        match self {
            BoundExpr::Aggregate { .. } => true,
            BoundExpr::Neg(e) => e.contains_aggregate(),
            BoundExpr::Binary { left, right, .. } => left.contains_aggregate() || right.contains_aggregate(),
            _ => false,
        }
    }

    /// Rewrites every column position through `f`.
    pub fn map_columns(&self, f: &impl Fn(usize) -> BoundExpr) -> BoundExpr {
        match self {
            BoundExpr::Column(i) => f(*i),
            BoundExpr::Literal(_) | BoundExpr::Slot(_) => self.clone(),
            BoundExpr::Neg(e) => BoundExpr::Neg(Box::new(e.map_columns(f))),
            BoundExpr::Binary { op, left, right } => {
                BoundExpr::Binary { op: *op, left: Box::new(left.map_columns(f)), right: Box::new(right.map_columns(f)) }
            }
            BoundExpr::Aggregate { func, arg } => {
                BoundExpr::Aggregate { func: *func, arg: arg.as_ref().map(|a| Box::new(a.map_columns(f))) }
            }
        }
    }

    fn extract_aggregates(&self, out: &mut Vec<(AggregateFunc, Option<BoundExpr>)>) -> BoundExpr {
        match self {
            BoundExpr::Aggregate { func, arg } => {
                out.push((*func, arg.as_deref().cloned()));
                BoundExpr::Slot(out.len() - 1)
            }
            BoundExpr::Neg(e) => BoundExpr::Neg(Box::new(e.extract_aggregates(out))),
            BoundExpr::Binary { op, left, right } => BoundExpr::Binary {
                op: *op,
                left: Box::new(left.extract_aggregates(out)),
                right: Box::new(right.extract_aggregates(out)),
            },
            other => other.clone(),
        }
    }
}

impl BoundPredicate {
    /// Two-valued evaluation: a comparison involving NULL is false.
    pub fn eval(&self, row: &[Value]) -> Result<bool, EvalError> {
        match self {
            BoundPredicate::And(l, r) => Ok(l.eval(row)? && r.eval(row)?),
            BoundPredicate::Or(l, r) => Ok(l.eval(row)? || r.eval(row)?),
            BoundPredicate::Compare { left, op, right } => compare(*op, &left.eval(row)?, &right.eval(row)?),
            BoundPredicate::Like { expr, pattern, negated } => {
                let (v, p) = (expr.eval(row)?, pattern.eval(row)?);
                if v.is_null() || p.is_null() {
                    return Ok(false);
                }
                match (&v, &p) {
                    (Value::Text(s) | Value::Date(s), Value::Text(pat) | Value::Date(pat)) => {
                        Ok(like_match(s, pat) != *negated)
                    }
                    _ => Err(EvalError::TypeMismatch {
                        op: if *negated { "NOT LIKE" } else { "LIKE" }.into(),
                        left: v.type_name(),
                        right: p.type_name(),
                    }),
                }
            }
        }
    }

    pub fn max_column(&self) -> Option<usize> {
        match self {
            BoundPredicate::And(l, r) | BoundPredicate::Or(l, r) => l.max_column().max(r.max_column()),
            BoundPredicate::Compare { left, right, .. } => left.max_column().max(right.max_column()),
            BoundPredicate::Like { expr, pattern, .. } => expr.max_column().max(pattern.max_column()),
        }
    }

    pub fn conjuncts(self) -> Vec<BoundPredicate> {
        match self {
            BoundPredicate::And(l, r) => {
                let mut out = l.conjuncts();
                out.extend(r.conjuncts());
                out
            }
            other => vec![other],
        }
    }
}

pub fn compare(op: CompareOp, a: &Value, b: &Value) -> Result<bool, EvalError> {
    if a.is_null() || b.is_null() {
        return Ok(false);
    }
    let ord = a.sql_cmp(b).ok_or_else(|| EvalError::TypeMismatch {
        op: op.symbol().into(),
        left: a.type_name(),
        right: b.type_name(),
    })?;
    Ok(match op {
        CompareOp::Eq => ord == Ordering::Equal,
        CompareOp::NotEq => ord != Ordering::Equal,
        CompareOp::Lt => ord == Ordering::Less,
        CompareOp::LtEq => ord != Ordering::Greater,
        CompareOp::Gt => ord == Ordering::Greater,
        CompareOp::GtEq => ord != Ordering::Less,
    })
}

/// Case-sensitive SQL LIKE: `%` matches any run, `_` one character.
pub fn like_match(text: &str, pattern: &str) -> bool {
    let t: Vec<char> = text.chars().collect();
    let p: Vec<char> = pattern.chars().collect();
    let (mut ti, mut pi) = (0, 0);
    let mut backtrack: Option<(usize, usize)> = None;
    while ti < t.len() {
        if pi < p.len() && (p[pi] == '_' || (p[pi] != '%' && p[pi] == t[ti])) {
            ti += 1;
            pi += 1;
        } else if pi < p.len() && p[pi] == '%' {
            backtrack = Some((pi, ti));
            pi += 1;
        } else if let Some((bp, bt)) = backtrack {
            pi = bp + 1;
            ti = bt + 1;
            backtrack = Some((bp, bt + 1));
        } else {
            return false;
        }
    }
    p[pi..].iter().all(|&c| c == '%')
}

fn negate(v: Value) -> Result<Value, EvalError> {
    match v {
        Value::Null => Ok(Value::Null),
        Value::Integer(i) => i.checked_neg().map(Value::Integer).ok_or_else(|| EvalError::Overflow("-".into())),
        Value::Decimal(d) => Ok(Value::Decimal(Decimal::from_raw(-d.raw()))),
        other => Err(EvalError::TypeMismatch { op: "-".into(), left: "", right: other.type_name() }),
    }
}

fn as_raw_decimal(v: &Value) -> Option<RawDecimal> {
    match v {
        Value::Integer(i) => Some(RawDecimal::from(*i)),
        Value::Decimal(d) => Some(d.raw()),
        _ => None,
    }
}

/// Arithmetic with the fixed promotion rules: integer results for `+ - *` on
/// integers, decimal (10 places, half-even) otherwise; division by zero is NULL.
pub fn arith(op: BinaryOp, a: Value, b: Value) -> Result<Value, EvalError> {
    if a.is_null() || b.is_null() {
        return Ok(Value::Null);
    }
    let overflow = || EvalError::Overflow(op.symbol().into());
    if let (Value::Integer(x), Value::Integer(y)) = (&a, &b) {
        let r = match op {
            BinaryOp::Add => x.checked_add(*y),
            BinaryOp::Sub => x.checked_sub(*y),
            BinaryOp::Mul => x.checked_mul(*y),
            BinaryOp::Div => None,
        };
        if op != BinaryOp::Div {
            return r.map(Value::Integer).ok_or_else(overflow);
        }
    }
    let (Some(x), Some(y)) = (as_raw_decimal(&a), as_raw_decimal(&b)) else {
        return Err(EvalError::TypeMismatch { op: op.symbol().into(), left: a.type_name(), right: b.type_name() });
    };
    let r = match op {
        BinaryOp::Add => x.checked_add(y),
        BinaryOp::Sub => x.checked_sub(y),
        BinaryOp::Mul => x.checked_mul(y),
        BinaryOp::Div => {
            if y.is_zero() {
                return Ok(Value::Null);
            }
            x.checked_div(y)
        }
    };
    r.map(|d| Value::Decimal(Decimal::rounded(d))).ok_or_else(overflow)
}

enum Acc {
    Count(i64),
    Sum { int: i128, dec: Option<RawDecimal>, seen: bool },
    Avg { sum: RawDecimal, n: i64 },
    Extreme { best: Option<Value>, want: Ordering },
}

impl Acc {
    fn new(func: AggregateFunc) -> Acc {
        match func {
            AggregateFunc::Count => Acc::Count(0),
            AggregateFunc::Sum => Acc::Sum { int: 0, dec: None, seen: false },
            AggregateFunc::Avg => Acc::Avg { sum: RawDecimal::ZERO, n: 0 },
            AggregateFunc::Max => Acc::Extreme { best: None, want: Ordering::Greater },
            AggregateFunc::Min => Acc::Extreme { best: None, want: Ordering::Less },
        }
    }

    fn feed(&mut self, func: AggregateFunc, v: Value) -> Result<(), EvalError> {
        if v.is_null() {
            return Ok(());
        }
        let mismatch = |v: &Value| EvalError::TypeMismatch { op: func.name().into(), left: "", right: v.type_name() };
        let overflow = || EvalError::Overflow(func.name().into());
        match self {
            Acc::Count(n) => *n += 1,
            Acc::Sum { int, dec, seen } => {
                *seen = true;
                match (&v, dec.as_mut()) {
                    (Value::Integer(i), None) => *int = int.checked_add(*i as i128).ok_or_else(overflow)?,
                    _ => {
                        let x = as_raw_decimal(&v).ok_or_else(|| mismatch(&v))?;
                        let base = match dec {
                            Some(d) => *d,
                            None => RawDecimal::try_from_i128_with_scale(*int, 0).map_err(|_| overflow())?,
                        };
                        *dec = Some(base.checked_add(x).ok_or_else(overflow)?);
                    }
                }
            }
            Acc::Avg { sum, n } => {
                let x = as_raw_decimal(&v).ok_or_else(|| mismatch(&v))?;
                *sum = sum.checked_add(x).ok_or_else(overflow)?;
                *n += 1;
            }
            Acc::Extreme { best, want } => match best {
                None => *best = Some(v),
                Some(b) => {
                    let ord = v.sql_cmp(b).ok_or_else(|| EvalError::TypeMismatch {
                        op: func.name().into(),
                        left: b.type_name(),
                        right: v.type_name(),
                    })?;
                    if ord == *want {
                        *best = Some(v);
                    }
                }
            },
        }
        Ok(())
    }

    fn finish(self) -> Result<Value, EvalError> {
        Ok(match self {
            Acc::Count(n) => Value::Integer(n),
            Acc::Sum { seen: false, .. } => Value::Null,
            Acc::Sum { dec: Some(d), .. } => Value::Decimal(Decimal::rounded(d)),
            Acc::Sum { int, .. } => match i64::try_from(int) {
                Ok(i) => Value::Integer(i),
                Err(_) => Value::Decimal(Decimal::from_raw(
                    RawDecimal::try_from_i128_with_scale(int, 0).map_err(|_| EvalError::Overflow("SUM".into()))?,
                )),
            },
            Acc::Avg { n: 0, .. } => Value::Null,
            Acc::Avg { sum, n } => Value::Decimal(Decimal::rounded(sum / RawDecimal::from(n))),
            Acc::Extreme { best, .. } => best.unwrap_or(Value::Null),
        })
    }
}

/// A bound output list. When any item aggregates, the whole result collapses
/// to one row; plain column references then take their value from the first
/// input row (NULL when there is none).
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    names: Vec<String>,
    items: Vec<BoundExpr>,
    aggregates: Vec<(AggregateFunc, Option<BoundExpr>)>,
}

impl Projection {
    pub fn new(columns: Vec<(String, BoundExpr)>) -> Projection {
        let mut aggregates = Vec::new();
        let (names, items) = columns.into_iter().map(|(n, e)| (n, e.extract_aggregates(&mut aggregates))).unzip();
        Projection { names, items, aggregates }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn width(&self) -> usize {
        self.items.len()
    }

    pub fn is_aggregate(&self) -> bool {
        !self.aggregates.is_empty()
    }

    pub fn apply(&self, rows: &[Vec<Value>]) -> Result<Vec<Vec<Value>>, EvalError> {
        if !self.is_aggregate() {
            return rows.iter().map(|r| self.items.iter().map(|e| e.eval(r)).collect()).collect();
        }
        let mut accs: Vec<Acc> = self.aggregates.iter().map(|(f, _)| Acc::new(*f)).collect();
        for row in rows {
            for (acc, (func, arg)) in accs.iter_mut().zip(&self.aggregates) {
                let v = match arg {
                    None => Value::Integer(1),
                    Some(a) => a.eval(row)?,
                };
                acc.feed(*func, v)?;
            }
        }
        let slots = accs.into_iter().map(Acc::finish).collect::<Result<Vec<_>, _>>()?;
        let ctx = Ctx { row: rows.first().map(Vec::as_slice), slots: &slots };
        Ok(vec![self.items.iter().map(|e| e.eval_in(&ctx)).collect::<Result<_, _>>()?])
    }
}
