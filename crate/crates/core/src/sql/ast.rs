use serde::Serialize;

use crate::types::Decimal;

/// A parsed statement. Exactly one variant per statement.
#[derive(Debug, Clone, PartialEq)]
pub enum Query {
    Select(SelectQuery),
    Insert(InsertQuery),
    Update(UpdateQuery),
    Delete(DeleteQuery),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum QueryKind {
    Select,
    Insert,
    Update,
    Delete,
}

impl QueryKind {
    pub fn letter(self) -> char {
        match self {
            QueryKind::Select => 'S',
            QueryKind::Insert => 'I',
            QueryKind::Update => 'U',
            QueryKind::Delete => 'D',
        }
    }
}

impl Query {
    /// Kind of the outermost statement.
    pub fn kind(&self) -> QueryKind {
        match self {
            Query::Select(_) => QueryKind::Select,
            Query::Insert(_) => QueryKind::Insert,
            Query::Update(_) => QueryKind::Update,
            Query::Delete(_) => QueryKind::Delete,
        }
    }

    /// Number of SELECT nodes anywhere in the statement.
    pub fn select_count(&self) -> usize {
        match self {
            Query::Select(s) => s.select_count(),
            Query::Insert(i) => match &i.source {
                InsertSource::Values(_) => 0,
                InsertSource::Select(s) => s.select_count(),
            },
            Query::Update(u) => u
                .set_clauses
                .iter()
                .map(|c| match &c.value {
                    SetValue::Subquery(s) => s.select_count(),
                    SetValue::Expr(_) => 0,
                })
                .sum(),
            Query::Delete(_) => 0,
        }
    }

    /// Short type tag such as `S`, `U(S)` or `I(S)`: the outer kind plus a
    /// marker when nested SELECTs are present.
    pub fn kind_tag(&self) -> String {
        let nested = match self {
            Query::Select(_) => self.select_count() > 1,
            _ => self.select_count() > 0,
        };
        if nested {
            format!("{}(S)", self.kind().letter())
        } else {
            self.kind().letter().to_string()
        }
    }
}

/// Free-function form of [`Query::kind`].
pub fn classify(q: &Query) -> QueryKind {
    q.kind()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectQuery {
    pub projections: Vec<ProjectionItem>,
    pub from: Vec<FromItem>,
    pub selection: Option<Predicate>,
}

impl SelectQuery {
    pub fn select_count(&self) -> usize {
        1 + self
            .from
            .iter()
            .map(|f| match f {
                FromItem::Derived { subquery, .. } => subquery.select_count(),
                FromItem::Base { .. } => 0,
            })
            .sum::<usize>()
    }

    /// Base table names referenced anywhere below this query.
    pub fn base_tables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for item in &self.from {
            match item {
                FromItem::Base { name, .. } => out.push(name.as_str()),
                FromItem::Derived { subquery, .. } => out.extend(subquery.base_tables()),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FromItem {
    Base { name: String, alias: Option<String> },
    Derived { subquery: Box<SelectQuery>, alias: String },
}

impl FromItem {
    /// The name this item is referenced by in its query level.
    pub fn binding_name(&self) -> &str {
        match self {
            FromItem::Base { name, alias } => alias.as_deref().unwrap_or(name),
            FromItem::Derived { alias, .. } => alias,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProjectionItem {
    Star,
    Expr { expr: Expr, alias: Option<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColumnRef {
    pub qualifier: Option<String>,
    pub name: String,
}

impl ColumnRef {
    pub fn new(qualifier: Option<&str>, name: &str) -> ColumnRef {
        ColumnRef { qualifier: qualifier.map(str::to_string), name: name.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Integer(i64),
    Decimal(Decimal),
    Str(String),
    Date(String),
    Null,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggregateFunc {
    Sum,
    Count,
    Avg,
    Max,
    Min,
}

impl AggregateFunc {
    pub fn from_name(name: &str) -> Option<AggregateFunc> {
        match name {
            "sum" => Some(AggregateFunc::Sum),
            "count" => Some(AggregateFunc::Count),
            "avg" => Some(AggregateFunc::Avg),
            "max" => Some(AggregateFunc::Max),
            "min" => Some(AggregateFunc::Min),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AggregateFunc::Sum => "SUM",
            AggregateFunc::Count => "COUNT",
            AggregateFunc::Avg => "AVG",
            AggregateFunc::Max => "MAX",
            AggregateFunc::Min => "MIN",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Column(ColumnRef),
    Literal(Literal),
    Neg(Box<Expr>),
    Binary { op: BinaryOp, left: Box<Expr>, right: Box<Expr> },
    /// `arg == None` is `COUNT(*)`.
    Aggregate { func: AggregateFunc, arg: Option<Box<Expr>> },
}

impl Expr {
    pub fn column(qualifier: Option<&str>, name: &str) -> Expr {
        Expr::Column(ColumnRef::new(qualifier, name))
    }

    pub fn contains_aggregate(&self) -> bool {
        match self {
            Expr::Aggregate { .. } => true,
            Expr::Neg(e) => e.contains_aggregate(),
            Expr::Binary { left, right, .. } => left.contains_aggregate() || right.contains_aggregate(),
            Expr::Column(_) | Expr::Literal(_) => false,
        }
    }

    pub fn visit_columns<'a>(&'a self, f: &mut impl FnMut(&'a ColumnRef)) {
        match self {
            Expr::Column(c) => f(c),
            Expr::Literal(_) => {}
            Expr::Neg(e) => e.visit_columns(f),
            Expr::Binary { left, right, .. } => {
                left.visit_columns(f);
                right.visit_columns(f);
            }
            Expr::Aggregate { arg, .. } => {
                if let Some(a) = arg {
                    a.visit_columns(f);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompareOp {
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::NotEq => "<>",
            CompareOp::Lt => "<",
            CompareOp::LtEq => "<=",
            CompareOp::Gt => ">",
            CompareOp::GtEq => ">=",
        }
    }
}

/// Boolean qualification tree. Never contains a nested SELECT.
#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    And(Box<Predicate>, Box<Predicate>),
    Or(Box<Predicate>, Box<Predicate>),
    Compare { left: Expr, op: CompareOp, right: Expr },
    Like { expr: Expr, pattern: Expr, negated: bool },
}

impl Predicate {
    pub fn and(left: Predicate, right: Predicate) -> Predicate {
        Predicate::And(Box::new(left), Box::new(right))
    }

    pub fn or(left: Predicate, right: Predicate) -> Predicate {
        Predicate::Or(Box::new(left), Box::new(right))
    }

    /// Top-level AND operands, left to right.
    pub fn conjuncts(&self) -> Vec<&Predicate> {
        match self {
            Predicate::And(l, r) => {
                let mut out = l.conjuncts();
                out.extend(r.conjuncts());
                out
            }
            other => vec![other],
        }
    }

    pub fn visit_exprs<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        match self {
            Predicate::And(l, r) | Predicate::Or(l, r) => {
                l.visit_exprs(f);
                r.visit_exprs(f);
            }
            Predicate::Compare { left, right, .. } => {
                f(left);
                f(right);
            }
            Predicate::Like { expr, pattern, .. } => {
                f(expr);
                f(pattern);
            }
        }
    }

    /// Rebuilds the tree with every expression passed through `f`.
    pub fn try_map_exprs<E>(&self, f: &mut impl FnMut(&Expr) -> Result<Expr, E>) -> Result<Predicate, E> {
        Ok(match self {
            Predicate::And(l, r) => Predicate::and(l.try_map_exprs(f)?, r.try_map_exprs(f)?),
            Predicate::Or(l, r) => Predicate::or(l.try_map_exprs(f)?, r.try_map_exprs(f)?),
            Predicate::Compare { left, op, right } => {
                Predicate::Compare { left: f(left)?, op: *op, right: f(right)? }
            }
            Predicate::Like { expr, pattern, negated } => {
                Predicate::Like { expr: f(expr)?, pattern: f(pattern)?, negated: *negated }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateQuery {
    pub table: String,
    pub set_clauses: Vec<SetClause>,
    pub selection: Option<Predicate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetClause {
    pub column: String,
    pub value: SetValue,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SetValue {
    Expr(Expr),
    Subquery(Box<SelectQuery>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InsertQuery {
    pub table: String,
    /// Empty means every column in schema order.
    pub columns: Vec<String>,
    pub source: InsertSource,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InsertSource {
    Values(Vec<Vec<Expr>>),
    Select(Box<SelectQuery>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeleteQuery {
    pub table: String,
    pub selection: Option<Predicate>,
}

/// `CREATE TABLE` statement.
#[derive(Debug, Clone, PartialEq)]
pub struct CreateTable {
    pub name: String,
    pub columns: Vec<(String, String)>,
    pub primary_key: Vec<String>,
}
