//! AST pretty-printer. Output reparses to a structurally equal AST.

use std::fmt::Write;

use super::ast::*;

pub fn render(q: &Query) -> String {
    match q {
        Query::Select(s) => render_select(s),
        Query::Insert(i) => render_insert(i),
        Query::Update(u) => render_update(u),
        Query::Delete(d) => render_delete(d),
    }
}

pub fn render_select(s: &SelectQuery) -> String {
    let mut out = String::from("SELECT ");
    let items: Vec<String> = s.projections.iter().map(render_projection).collect();
    out.push_str(&items.join(", "));
    out.push_str(" FROM ");
    let from: Vec<String> = s.from.iter().map(render_from).collect();
    out.push_str(&from.join(", "));
    if let Some(p) = &s.selection {
        out.push_str(" WHERE ");
        out.push_str(&render_predicate(p));
    }
    out
}

fn render_projection(p: &ProjectionItem) -> String {
    match p {
        ProjectionItem::Star => "*".to_string(),
        ProjectionItem::Expr { expr, alias: None } => render_expr(expr),
        ProjectionItem::Expr { expr, alias: Some(a) } => format!("{} AS {a}", render_expr(expr)),
    }
}

fn render_from(f: &FromItem) -> String {
    match f {
        FromItem::Base { name, alias: None } => name.clone(),
        FromItem::Base { name, alias: Some(a) } => format!("{name} AS {a}"),
        FromItem::Derived { subquery, alias } => format!("({}) AS {alias}", render_select(subquery)),
    }
}

fn precedence(op: BinaryOp) -> u8 {
    match op {
        BinaryOp::Add | BinaryOp::Sub => 1,
        BinaryOp::Mul | BinaryOp::Div => 2,
    }
}

pub fn render_expr(e: &Expr) -> String {
    match e {
        Expr::Column(c) => render_column(c),
        Expr::Literal(l) => render_literal(l),
        Expr::Neg(inner) => match inner.as_ref() {
            Expr::Column(_) | Expr::Literal(Literal::Integer(_) | Literal::Decimal(_)) => {
                format!("-{}", render_expr(inner))
            }
            _ => format!("-({})", render_expr(inner)),
        },
        Expr::Binary { op, left, right } => {
            let p = precedence(*op);
            let l = match left.as_ref() {
                Expr::Binary { op: lop, .. } if precedence(*lop) < p => format!("({})", render_expr(left)),
                _ => render_expr(left),
            };
            // Operators are left-associative, so an equal-precedence right
            // operand needs parentheses too.
            let r = match right.as_ref() {
                Expr::Binary { op: rop, .. } if precedence(*rop) <= p => format!("({})", render_expr(right)),
                _ => render_expr(right),
            };
            format!("{l} {} {r}", op.symbol())
        }
        Expr::Aggregate { func, arg: None } => format!("{}(*)", func.name()),
        Expr::Aggregate { func, arg: Some(a) } => format!("{}({})", func.name(), render_expr(a)),
    }
}

pub fn render_column(c: &ColumnRef) -> String {
    match &c.qualifier {
        Some(q) => format!("{q}.{}", c.name),
        None => c.name.clone(),
    }
}

fn render_literal(l: &Literal) -> String {
    match l {
        Literal::Integer(v) => v.to_string(),
        Literal::Decimal(d) => {
            let s = d.to_string();
            // Keep a decimal point so the literal reparses as a decimal.
            if s.contains('.') {
                s
            } else {
                format!("{s}.0")
            }
        }
        Literal::Str(s) => quote(s),
        Literal::Date(s) => format!("DATE {}", quote(s)),
        Literal::Null => "NULL".to_string(),
    }
}

fn quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

pub fn render_predicate(p: &Predicate) -> String {
    match p {
        Predicate::And(l, r) => {
            let wrap = |x: &Predicate, right: bool| match x {
                Predicate::Or(..) => format!("({})", render_predicate(x)),
                Predicate::And(..) if right => format!("({})", render_predicate(x)),
                _ => render_predicate(x),
            };
            format!("{} AND {}", wrap(l, false), wrap(r, true))
        }
        Predicate::Or(l, r) => {
            let right = match r.as_ref() {
                Predicate::Or(..) => format!("({})", render_predicate(r)),
                _ => render_predicate(r),
            };
            format!("{} OR {right}", render_predicate(l))
        }
        Predicate::Compare { left, op, right } => {
            format!("{} {} {}", render_expr(left), op.symbol(), render_expr(right))
        }
        Predicate::Like { expr, pattern, negated } => {
            let kw = if *negated { "NOT LIKE" } else { "LIKE" };
            format!("{} {kw} {}", render_expr(expr), render_expr(pattern))
        }
    }
}

fn render_update(u: &UpdateQuery) -> String {
    let mut out = format!("UPDATE {} SET ", u.table);
    let sets: Vec<String> = u
        .set_clauses
        .iter()
        .map(|c| match &c.value {
            SetValue::Expr(e) => format!("{} = {}", c.column, render_expr(e)),
            SetValue::Subquery(s) => format!("{} = ({})", c.column, render_select(s)),
        })
        .collect();
    out.push_str(&sets.join(", "));
    if let Some(p) = &u.selection {
        let _ = write!(out, " WHERE {}", render_predicate(p));
    }
    out
}

fn render_insert(i: &InsertQuery) -> String {
    let mut out = format!("INSERT INTO {}", i.table);
    if !i.columns.is_empty() {
        let _ = write!(out, " ({})", i.columns.join(", "));
    }
    match &i.source {
        InsertSource::Values(rows) => {
            let rows: Vec<String> = rows
                .iter()
                .map(|r| format!("({})", r.iter().map(render_expr).collect::<Vec<_>>().join(", ")))
                .collect();
            let _ = write!(out, " VALUES {}", rows.join(", "));
        }
        InsertSource::Select(s) => {
            let _ = write!(out, " {}", render_select(s));
        }
    }
    out
}

fn render_delete(d: &DeleteQuery) -> String {
    let mut out = format!("DELETE FROM {}", d.table);
    if let Some(p) = &d.selection {
        let _ = write!(out, " WHERE {}", render_predicate(p));
    }
    out
}
