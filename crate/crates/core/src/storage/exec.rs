use super::{Database, StorageError};
use crate::eval::{output_name, Binder, BoundExpr, BoundPredicate, Projection, Scope};
use crate::sql::ast::{FromItem, ProjectionItem, SelectQuery};
use crate::types::{Row, Value};

/// Named result columns plus rows.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ResultSet {
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

/// One FROM item ready for the join loop.
struct Relation<'a> {
    binding: String,
    names: Vec<String>,
    rows: Vec<&'a Row>,
}

impl Database {
    /// Executes a SELECT: nested loops in FROM order, base rows in key order,
    /// each WHERE conjunct tested at the shallowest loop that binds its columns.
    pub fn exec_select(&self, q: &SelectQuery) -> Result<ResultSet, StorageError> {
        let mut derived: Vec<ResultSet> = Vec::new();
        for item in &q.from {
            if let FromItem::Derived { subquery, .. } = item {
                derived.push(self.exec_select(subquery)?);
            }
        }
        let mut derived_iter = derived.iter();
        let mut rels = Vec::with_capacity(q.from.len());
        for item in &q.from {
            rels.push(match item {
                FromItem::Base { name, .. } => {
                    let def = self.table(name)?;
                    Relation {
                        binding: item.binding_name().to_string(),
                        names: def.column_names().map(str::to_string).collect(),
                        rows: self.rows(name)?.collect(),
                    }
                }
                FromItem::Derived { alias, .. } => {
                    let rs = derived_iter.next().expect("materialized above");
                    Relation { binding: alias.clone(), names: rs.columns.clone(), rows: rs.rows.iter().collect() }
                }
            });
        }

        let mut scope = Scope::new();
        let mut offsets = Vec::with_capacity(rels.len());
        for r in &rels {
            offsets.push(scope.len());
            scope.push(&r.binding, r.names.iter().cloned());
        }
        let binder = Binder::identity(&scope);

        let mut by_depth: Vec<Vec<BoundPredicate>> = vec![Vec::new(); rels.len()];
        if let Some(p) = &q.selection {
            for c in binder.predicate(p)?.conjuncts() {
                let depth = match c.max_column() {
                    Some(col) => offsets.iter().rposition(|&o| o <= col).unwrap_or(0),
                    None => 0,
                };
                by_depth[depth].push(c);
            }
        }

        let mut columns = Vec::new();
        for item in &q.projections {
            match item {
                ProjectionItem::Star => {
                    columns.extend((0..scope.len()).map(|i| (scope.name(i).to_string(), BoundExpr::Column(i))))
                }
                ProjectionItem::Expr { expr, alias } => {
                    columns.push((output_name(expr, alias.as_deref()), binder.expr(expr)?))
                }
            }
        }
        let projection = Projection::new(columns);

        let mut joined = Vec::new();
        let mut buf = vec![Value::Null; scope.len()];
        nested_loop(0, &rels, &offsets, &by_depth, &mut buf, &mut joined)?;
        let rows = projection.apply(&joined)?;
        Ok(ResultSet { columns: projection.names().to_vec(), rows })
    }
}

fn nested_loop(
    depth: usize,
    rels: &[Relation<'_>],
    offsets: &[usize],
    by_depth: &[Vec<BoundPredicate>],
    buf: &mut Vec<Value>,
    out: &mut Vec<Row>,
) -> Result<(), StorageError> {
    if depth == rels.len() {
        out.push(buf.clone());
        return Ok(());
    }
    let off = offsets[depth];
    'rows: for row in &rels[depth].rows {
        buf[off..off + row.len()].clone_from_slice(row);
        for p in &by_depth[depth] {
            if !p.eval(buf)? {
                continue 'rows;
            }
        }
        nested_loop(depth + 1, rels, offsets, by_depth, buf, out)?;
    }
    Ok(())
}
