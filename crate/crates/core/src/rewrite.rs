//! Projection widening. Every SELECT level, innermost first, is rewritten to
//! project all columns of every base table it reaches, so each result row
//! carries whole base tuples that can be fingerprinted. The user's projection
//! is kept as an expression list over the wide row.

use std::collections::HashMap;
use std::ops::Range;

use crate::eval::{output_name, BindError, Binder, BoundExpr, EvalError, Projection, Scope};
use crate::sql::ast::{ColumnRef, Expr, FromItem, Literal, ProjectionItem, SelectQuery};
use crate::storage::Catalog;
use crate::types::{Row, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    #[error(transparent)]
    Bind(#[from] BindError),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// One base-table occurrence reachable from the query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableEntry {
    pub table: String,
    /// Binding names from the outermost level down to the base table.
    pub alias_path: Vec<String>,
    /// Wide-row columns holding this table's attributes, in schema order.
    pub columns: Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewrittenSelect {
    pub wide_query: SelectQuery,
    pub table_list: Vec<TableEntry>,
    pub original_projection: Projection,
}

impl RewrittenSelect {
    pub fn wide_width(&self) -> usize {
        self.table_list.last().map_or(0, |e| e.columns.end)
    }

    pub fn column_map(&self) -> impl Iterator<Item = (&TableEntry, Range<usize>)> {
        self.table_list.iter().map(|e| (e, e.columns.clone()))
    }

    pub fn output_names(&self) -> &[String] {
        self.original_projection.names()
    }
}

/// Widened form of one SELECT level.
struct Level {
    wide: SelectQuery,
    /// Output names of the wide projection, as a parent sees them.
    exposed: Vec<String>,
    /// Entries with column ranges relative to this level's wide output.
    entries: Vec<TableEntry>,
    /// The original projection as expressions over the wide output.
    outputs: Vec<(String, BoundExpr)>,
}

pub fn change_projection(q: &SelectQuery, catalog: &Catalog) -> Result<RewrittenSelect, RewriteError> {
    let level = widen(q, catalog, false)?;
    Ok(RewrittenSelect {
        wide_query: level.wide,
        table_list: level.entries,
        original_projection: Projection::new(level.outputs),
    })
}

/// The base tuple stored in `entry`'s slice of a wide row.
pub fn tuples_of<'a>(wide_row: &'a [Value], entry: &TableEntry) -> &'a [Value] {
    &wide_row[entry.columns.clone()]
}

pub fn project_results(wide_rows: &[Row], rw: &RewrittenSelect) -> Result<Vec<Row>, EvalError> {
    rw.original_projection.apply(wide_rows)
}

fn widen(q: &SelectQuery, catalog: &Catalog, is_derived: bool) -> Result<Level, RewriteError> {
    let mut from = Vec::with_capacity(q.from.len());
    let mut scope = Scope::new();
    let mut targets: Vec<BoundExpr> = Vec::new();
    // per input column: (binding, exposed name, entry index, column within the table)
    let mut inputs: Vec<(String, String, usize, usize)> = Vec::new();
    let mut entries: Vec<TableEntry> = Vec::new();

    for item in &q.from {
        let binding = item.binding_name().to_string();
        let offset = inputs.len();
        match item {
            FromItem::Base { name, .. } => {
                let def = catalog.get(name).ok_or_else(|| BindError::UnknownTable(name.clone()))?;
                let entry_idx = entries.len();
                entries.push(TableEntry {
                    table: def.name.clone(),
                    alias_path: vec![binding.clone()],
                    columns: offset..offset + def.arity(),
                });
                scope.push(&binding, def.column_names());
                for (j, c) in def.column_names().enumerate() {
                    targets.push(BoundExpr::Column(offset + j));
                    inputs.push((binding.clone(), c.to_string(), entry_idx, j));
                }
                from.push(item.clone());
            }
            FromItem::Derived { subquery, alias } => {
                let sub = widen(subquery, catalog, true)?;
                if sub.outputs.iter().any(|(_, e)| e.contains_aggregate()) {
                    return Err(RewriteError::Unsupported(format!("aggregate inside derived table {alias}")));
                }
                let base = entries.len();
                for e in &sub.entries {
                    let mut alias_path = vec![binding.clone()];
                    alias_path.extend(e.alias_path.iter().cloned());
                    entries.push(TableEntry {
                        table: e.table.clone(),
                        alias_path,
                        columns: offset + e.columns.start..offset + e.columns.end,
                    });
                }
                for (k, name) in sub.exposed.iter().enumerate() {
                    let (entry, col) = sub
                        .entries
                        .iter()
                        .enumerate()
                        .find(|(_, e)| e.columns.contains(&k))
                        .map(|(i, e)| (i, k - e.columns.start))
                        .expect("every wide column belongs to a table");
                    inputs.push((binding.clone(), name.clone(), base + entry, col));
                }
                scope.push(&binding, sub.outputs.iter().map(|(n, _)| n.clone()));
                targets.extend(sub.outputs.iter().map(|(_, e)| e.map_columns(&|i| BoundExpr::Column(offset + i))));
                from.push(FromItem::Derived { subquery: Box::new(sub.wide), alias: alias.clone() });
            }
        }
    }

    let binder = Binder { scope: &scope, targets: Some(&targets) };
    let mut outputs = Vec::new();
    for item in &q.projections {
        match item {
            ProjectionItem::Star => {
                outputs.extend((0..scope.len()).map(|i| (scope.name(i).to_string(), targets[i].clone())))
            }
            ProjectionItem::Expr { expr, alias } => {
                outputs.push((output_name(expr, alias.as_deref()), binder.expr(expr)?))
            }
        }
    }

    let qualify = q.from.len() > 1;
    let mut name_count: HashMap<&str, usize> = HashMap::new();
    for (_, n, _, _) in &inputs {
        *name_count.entry(n.as_str()).or_default() += 1;
    }
    let column_ast = |k: usize| {
        let (binding, name, _, _) = &inputs[k];
        Expr::Column(ColumnRef { qualifier: qualify.then(|| binding.clone()), name: name.clone() })
    };

    let selection = match &q.selection {
        None => None,
        Some(p) => Some(p.try_map_exprs(&mut |e| {
            rewrite_expr(e, &binder, &|k, original: &ColumnRef| {
                let (_, name, _, _) = &inputs[k];
                if *name == original.name && (original.qualifier.is_some() || name_count[name.as_str()] == 1) {
                    Expr::Column(original.clone())
                } else {
                    column_ast(k)
                }
            }, &column_ast)
        })?),
    };

    let exposed: Vec<String> = inputs
        .iter()
        .map(|(_, name, entry, col)| {
            if name_count[name.as_str()] == 1 {
                return name.clone();
            }
            let e = &entries[*entry];
            let def = catalog.get(&e.table).expect("resolved above");
            format!("{}__{}__{}", e.alias_path.join("__"), e.table, def.columns[*col].name)
        })
        .collect();

    let projections = (0..inputs.len())
        .map(|k| ProjectionItem::Expr {
            expr: column_ast(k),
            alias: (is_derived && exposed[k] != inputs[k].1).then(|| exposed[k].clone()),
        })
        .collect();

    Ok(Level { wide: SelectQuery { projections, from, selection }, exposed, entries, outputs })
}

/// Rewrites column references of a WHERE expression against the widened
/// inputs. A reference that still names a wide column is kept as written when
/// it stays unambiguous; anything else is replaced by the expression it denotes.
fn rewrite_expr(
    e: &Expr,
    binder: &Binder<'_>,
    direct: &dyn Fn(usize, &ColumnRef) -> Expr,
    column_ast: &dyn Fn(usize) -> Expr,
) -> Result<Expr, RewriteError> {
    Ok(match e {
        Expr::Column(c) => match binder.column(c)? {
            BoundExpr::Column(k) => direct(k, c),
            other => bound_to_ast(&other, column_ast),
        },
        Expr::Literal(_) => e.clone(),
        Expr::Neg(inner) => Expr::Neg(Box::new(rewrite_expr(inner, binder, direct, column_ast)?)),
        Expr::Binary { op, left, right } => Expr::Binary {
            op: *op,
            left: Box::new(rewrite_expr(left, binder, direct, column_ast)?),
            right: Box::new(rewrite_expr(right, binder, direct, column_ast)?),
        },
        Expr::Aggregate { .. } => return Err(RewriteError::Unsupported("aggregate in WHERE".into())),
    })
}

fn bound_to_ast(b: &BoundExpr, column_ast: &dyn Fn(usize) -> Expr) -> Expr {
    match b {
        BoundExpr::Column(k) => column_ast(*k),
        BoundExpr::Literal(v) => Expr::Literal(match v {
            Value::Null => Literal::Null,
            Value::Integer(i) => Literal::Integer(*i),
            Value::Decimal(d) => Literal::Decimal(*d),
            Value::Text(s) => Literal::Str(s.clone()),
            Value::Date(s) => Literal::Date(s.clone()),
        }),
        BoundExpr::Neg(e) => Expr::Neg(Box::new(bound_to_ast(e, column_ast))),
        BoundExpr::Binary { op, left, right } => Expr::Binary {
            op: *op,
            left: Box::new(bound_to_ast(left, column_ast)),
            right: Box::new(bound_to_ast(right, column_ast)),
        },
        BoundExpr::Aggregate { .. } | BoundExpr::Slot(_) => unreachable!("derived-table aggregates are rejected"),
    }
}
