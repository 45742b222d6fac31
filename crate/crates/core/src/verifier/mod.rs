//! The gateway: every statement is parsed, widened, executed, and checked
//! against the ledger before results are released or changes are applied.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::eval::{BindError, Binder, BoundExpr, EvalError, Scope};
use crate::fingerprint::{fingerprint, row_id, Fingerprint, FingerprintError, RowId};
use crate::ledger::{Ledger, LedgerError, PeerId, RecordStatus, SimulatedLedger, TxOp};
use crate::rewrite::{change_projection, project_results, tuples_of, RewriteError};
use crate::sql::ast::{
    DeleteQuery, FromItem, InsertQuery, InsertSource, ProjectionItem, Query, SelectQuery, SetValue, UpdateQuery,
};
use crate::sql::{parse, ParseError};
use crate::storage::{Database, ResultSet, StorageError, TableDef, Tuple};
use crate::types::{Row, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GatewayError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Fingerprint(#[from] FingerprintError),
    #[error("tampering detected in {} tuple(s)", .alerts.len())]
    TamperDetected { alerts: Vec<TamperAlert>, report: Box<VerificationReport> },
    #[error("subquery for SET {column} returned {rows} row(s) of {columns} column(s); exactly one value is required")]
    NonScalarSubquery { column: String, rows: usize, columns: usize },
    #[error("primary-key column {0} cannot be updated")]
    PkUpdateUnsupported(String),
    #[error("INSERT into {0} cannot select from the same table")]
    SelfReferentialInsert(String),
    #[error("column {0} listed twice")]
    DuplicateColumn(String),
    #[error("audit log: {0}")]
    AuditLog(String),
}

impl From<BindError> for GatewayError {
    fn from(e: BindError) -> Self {
        GatewayError::Storage(e.into())
    }
}

impl GatewayError {
    pub fn is_tamper(&self) -> bool {
        matches!(self, GatewayError::TamperDetected { .. })
    }
}

/// What the ledger said about a tuple that failed verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expected {
    /// No fingerprint was ever recorded for this RowID.
    Absent,
    /// The record exists but is marked deleted.
    Deleted(Fingerprint),
    Fingerprint(Fingerprint),
}

impl fmt::Display for Expected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expected::Absent => f.write_str("ABSENT"),
            Expected::Deleted(_) => f.write_str("DELETED"),
            Expected::Fingerprint(fp) => write!(f, "{fp}"),
        }
    }
}

impl Serialize for Expected {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TamperAlert {
    pub row_id: RowId,
    pub table: String,
    pub expected: Expected,
    pub computed: Fingerprint,
    /// SHA-256 of the statement text, absent for audits.
    pub query_hash: Option<String>,
    pub at: DateTime<Utc>,
}

impl TamperAlert {
    /// One audit-log line: timestamp, table, row id, expected, computed.
    pub fn log_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.at.to_rfc3339_opts(SecondsFormat::Secs, true),
            self.table,
            self.row_id,
            self.expected,
            self.computed
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MissingRow {
    pub row_id: RowId,
    pub table: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountMismatch {
    pub table: String,
    pub db_count: usize,
    /// `None` when the ledger holds no count for the table.
    pub ledger_count: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Verified,
    Tampered,
}

fn secs<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PhaseTimings {
    #[serde(serialize_with = "secs")]
    pub parse: Duration,
    #[serde(serialize_with = "secs")]
    pub rewrite: Duration,
    #[serde(serialize_with = "secs")]
    pub db_exec: Duration,
    #[serde(serialize_with = "secs")]
    pub ledger_lookup: Duration,
    #[serde(serialize_with = "secs")]
    pub ledger_commit: Duration,
}

impl PhaseTimings {
    pub fn total(&self) -> Duration {
        self.parse + self.rewrite + self.db_exec + self.ledger_lookup + self.ledger_commit
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    /// Statement kind with nesting marker, e.g. `S`, `U(S)`.
    pub query_kind: String,
    pub tables_touched: Vec<String>,
    /// Distinct RowIDs verified.
    pub tuples_checked: usize,
    /// Base tuples examined before de-duplication.
    pub tuples_scanned: usize,
    pub tuples_mutated: usize,
    pub ledger_txs_committed: usize,
    pub block_height: Option<u64>,
    pub elapsed: PhaseTimings,
    pub outcome: Outcome,
    pub alerts: Vec<TamperAlert>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MutationSummary {
    pub table: String,
    pub kind: String,
    pub rows_affected: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Response {
    Rows(ResultSet),
    Mutation(MutationSummary),
}

/// Per-statement working state: verified RowIDs, alerts, and phase clocks.
struct Ctx {
    query_hash: Option<String>,
    checked: HashSet<RowId>,
    scanned: usize,
    tables: BTreeSet<String>,
    alerts: Vec<TamperAlert>,
    t: PhaseTimings,
}

impl Ctx {
    fn new(sql: Option<&str>) -> Ctx {
        Ctx {
            query_hash: sql.map(|s| hex::encode(Sha256::digest(s.as_bytes()))),
            checked: HashSet::new(),
            scanned: 0,
            tables: BTreeSet::new(),
            alerts: Vec::new(),
            t: PhaseTimings::default(),
        }
    }

    fn report(self, kind: String, mutated: usize, txs: usize, block_height: Option<u64>) -> VerificationReport {
        VerificationReport {
            query_kind: kind,
            tables_touched: self.tables.into_iter().collect(),
            tuples_checked: self.checked.len(),
            tuples_scanned: self.scanned,
            tuples_mutated: mutated,
            ledger_txs_committed: txs,
            block_height,
            elapsed: self.t,
            outcome: if self.alerts.is_empty() { Outcome::Verified } else { Outcome::Tampered },
            alerts: self.alerts,
        }
    }
}

fn timed<T>(slot: &mut Duration, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    *slot += start.elapsed();
    out
}

/// `SELECT * FROM table WHERE ...` used to fetch rows an UPDATE or DELETE will touch.
fn select_star(table: &str, selection: Option<crate::sql::Predicate>) -> SelectQuery {
    SelectQuery {
        projections: vec![ProjectionItem::Star],
        from: vec![FromItem::Base { name: table.to_string(), alias: None }],
        selection,
    }
}

/// Right-hand side of a SET clause.
enum NewValue {
    /// Expression over the old row.
    Computed(BoundExpr),
    /// Result of a scalar subquery.
    Fixed(Value),
}

fn identity(def: &TableDef, row: &[Value]) -> Result<(RowId, Fingerprint), FingerprintError> {
    let rid = row_id(&def.pk_of(row), &def.name)?;
    Ok((rid, fingerprint(&rid, row)))
}

/// A database fronted by a fingerprint ledger.
#[derive(Debug, Clone)]
pub struct Gateway<L: Ledger = SimulatedLedger> {
    db: Database,
    ledger: L,
    audit_log: Option<PathBuf>,
}

impl<L: Ledger> Gateway<L> {
    pub fn new(db: Database, ledger: L) -> Gateway<L> {
        Gateway { db, ledger, audit_log: None }
    }

    /// Alerts are appended to this file, one tab-separated line each.
    pub fn with_audit_log(mut self, path: impl Into<PathBuf>) -> Gateway<L> {
        self.audit_log = Some(path.into());
        self
    }

    pub fn audit_log(&self) -> Option<&Path> {
        self.audit_log.as_deref()
    }

    pub fn db(&self) -> &Database {
        &self.db
    }

    /// Direct storage access, bypassing verification. Used to stage attacks.
    pub fn db_mut(&mut self) -> &mut Database {
        &mut self.db
    }

    pub fn ledger(&self) -> &L {
        &self.ledger
    }

    pub fn ledger_mut(&mut self) -> &mut L {
        &mut self.ledger
    }

    pub fn into_parts(self) -> (Database, L) {
        (self.db, self.ledger)
    }

    /// Records a fingerprint for every stored tuple and each table's row
    /// count, one block per table. Assumes the data is untampered.
    pub fn bootstrap(&mut self, principal: &PeerId) -> Result<BTreeMap<String, usize>, GatewayError> {
        let mut counts = BTreeMap::new();
        for def in self.db.catalog().tables() {
            let mut batch = Vec::with_capacity(self.db.row_count(&def.name)? + 1);
            for row in self.db.rows(&def.name)? {
                let (rid, fp) = identity(def, row)?;
                batch.push(TxOp::Put { row_id: rid, table: def.name.clone(), fingerprint: fp });
            }
            let n = batch.len();
            batch.push(TxOp::InitRowCount { table: def.name.clone(), count: n as i64 });
            self.ledger.submit(batch, principal)?;
            counts.insert(def.name.clone(), n);
        }
        Ok(counts)
    }

    /// Parses and runs one statement. Tampered tuples abort the statement
    /// with [`GatewayError::TamperDetected`]; nothing is released or changed.
    pub fn process(&mut self, sql: &str, principal: &PeerId) -> Result<(Response, VerificationReport), GatewayError> {
        let mut ctx = Ctx::new(Some(sql));
        let q = timed(&mut ctx.t.parse, || parse(sql))?;
        let kind = q.kind_tag();
        match q {
            Query::Select(s) => {
                let rows = self.verified_select_in(&s, &mut ctx)?;
                self.finish_check(&mut ctx, &kind)?;
                Ok((Response::Rows(rows), ctx.report(kind, 0, 0, None)))
            }
            Query::Update(u) => self.verified_update_in(&u, principal, ctx, kind),
            Query::Insert(i) => self.verified_insert_in(&i, principal, ctx, kind),
            Query::Delete(d) => self.verified_delete_in(&d, principal, ctx, kind),
        }
    }

    pub fn verified_select(&mut self, q: &SelectQuery) -> Result<(ResultSet, VerificationReport), GatewayError> {
        let mut ctx = Ctx::new(None);
        let kind = Query::Select(q.clone()).kind_tag();
        let rows = self.verified_select_in(q, &mut ctx)?;
        self.finish_check(&mut ctx, &kind)?;
        Ok((rows, ctx.report(kind, 0, 0, None)))
    }

    pub fn verified_update(
        &mut self,
        q: &UpdateQuery,
        principal: &PeerId,
    ) -> Result<(Response, VerificationReport), GatewayError> {
        let kind = Query::Update(q.clone()).kind_tag();
        self.verified_update_in(q, principal, Ctx::new(None), kind)
    }

    pub fn verified_insert(
        &mut self,
        q: &InsertQuery,
        principal: &PeerId,
    ) -> Result<(Response, VerificationReport), GatewayError> {
        let kind = Query::Insert(q.clone()).kind_tag();
        self.verified_insert_in(q, principal, Ctx::new(None), kind)
    }

    pub fn verified_delete(
        &mut self,
        q: &DeleteQuery,
        principal: &PeerId,
    ) -> Result<(Response, VerificationReport), GatewayError> {
        let kind = Query::Delete(q.clone()).kind_tag();
        self.verified_delete_in(q, principal, Ctx::new(None), kind)
    }

    /// Widens, executes once, verifies every base tuple in the wide result,
    /// then projects back. Alerts accumulate in `ctx`.
    fn verified_select_in(&self, q: &SelectQuery, ctx: &mut Ctx) -> Result<ResultSet, GatewayError> {
        let rw = timed(&mut ctx.t.rewrite, || change_projection(q, self.db.catalog()))?;
        let wide = timed(&mut ctx.t.db_exec, || self.db.exec_select(&rw.wide_query))?;
        let start = Instant::now();
        for entry in &rw.table_list {
            let def = self.db.table(&entry.table)?;
            ctx.tables.insert(def.name.clone());
            for row in &wide.rows {
                self.check_tuple(def, tuples_of(row, entry), ctx)?;
            }
        }
        ctx.t.ledger_lookup += start.elapsed();
        let rows = timed(&mut ctx.t.db_exec, || project_results(&wide.rows, &rw))?;
        Ok(ResultSet { columns: rw.output_names().to_vec(), rows })
    }

    fn check_tuple(&self, def: &TableDef, tuple: &[Value], ctx: &mut Ctx) -> Result<RowId, GatewayError> {
        ctx.scanned += 1;
        let rid = row_id(&def.pk_of(tuple), &def.name)?;
        if ctx.checked.contains(&rid) {
            return Ok(rid);
        }
        let fp = fingerprint(&rid, tuple);
        ctx.checked.insert(rid);
        let expected = match self.ledger.current_fingerprint(&rid) {
            None => Some(Expected::Absent),
            Some((RecordStatus::Deleted, stored)) => Some(Expected::Deleted(stored)),
            Some((_, stored)) if stored != fp => Some(Expected::Fingerprint(stored)),
            Some(_) => None,
        };
        if let Some(expected) = expected {
            ctx.alerts.push(TamperAlert {
                row_id: rid,
                table: def.name.clone(),
                expected,
                computed: fp,
                query_hash: ctx.query_hash.clone(),
                at: Utc::now(),
            });
        }
        Ok(rid)
    }

    /// Ends the integrity phase: alerts are logged and turned into an error.
    fn finish_check(&self, ctx: &mut Ctx, kind: &str) -> Result<(), GatewayError> {
        if ctx.alerts.is_empty() {
            return Ok(());
        }
        self.log_alerts(&ctx.alerts)?;
        let alerts = ctx.alerts.clone();
        let taken = std::mem::replace(ctx, Ctx::new(None));
        Err(GatewayError::TamperDetected { alerts, report: Box::new(taken.report(kind.to_string(), 0, 0, None)) })
    }

    fn log_alerts(&self, alerts: &[TamperAlert]) -> Result<(), GatewayError> {
        let Some(path) = &self.audit_log else { return Ok(()) };
        let io = |e: std::io::Error| GatewayError::AuditLog(format!("{}: {e}", path.display()));
        let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
        for a in alerts {
            writeln!(f, "{}", a.log_line()).map_err(io)?;
        }
        f.flush().map_err(io)
    }

    fn commit(&mut self, batch: Vec<TxOp>, principal: &PeerId, ctx: &mut Ctx) -> Result<Option<u64>, GatewayError> {
        if batch.is_empty() {
            return Ok(None);
        }
        let receipt = timed(&mut ctx.t.ledger_commit, || self.ledger.submit(batch, principal))?;
        Ok(Some(receipt.height))
    }

    fn verified_update_in(
        &mut self,
        q: &UpdateQuery,
        principal: &PeerId,
        mut ctx: Ctx,
        kind: String,
    ) -> Result<(Response, VerificationReport), GatewayError> {
        let def = self.db.table(&q.table)?.clone();
        let mut targets = Vec::with_capacity(q.set_clauses.len());
        for c in &q.set_clauses {
            let idx = def.column_index(&c.column).ok_or_else(|| StorageError::UnknownColumn {
                table: def.name.clone(),
                column: c.column.clone(),
            })?;
            if def.is_pk_column(idx) {
                return Err(GatewayError::PkUpdateUnsupported(c.column.clone()));
            }
            targets.push(idx);
        }

        // scalar subqueries first, each verified like any SELECT
        let mut scope = Scope::new();
        scope.push(&def.name, def.column_names());
        let binder = Binder::identity(&scope);
        let mut values = Vec::with_capacity(q.set_clauses.len());
        for c in &q.set_clauses {
            values.push(match &c.value {
                SetValue::Expr(e) => NewValue::Computed(binder.expr(e)?),
                SetValue::Subquery(sq) => {
                    let rs = self.verified_select_in(sq, &mut ctx)?;
                    if rs.rows.len() != 1 || rs.columns.len() != 1 {
                        self.finish_check(&mut ctx, &kind)?;
                        return Err(GatewayError::NonScalarSubquery {
                            column: c.column.clone(),
                            rows: rs.rows.len(),
                            columns: rs.columns.len(),
                        });
                    }
                    NewValue::Fixed(rs.rows[0][0].clone())
                }
            });
        }

        let old = self.verified_select_in(&select_star(&def.name, q.selection.clone()), &mut ctx)?;
        self.finish_check(&mut ctx, &kind)?;

        let mut batch = Vec::with_capacity(old.rows.len());
        let mut updates = Vec::with_capacity(old.rows.len());
        for row in &old.rows {
            let mut new = row.clone();
            for (&idx, v) in targets.iter().zip(&values) {
                new[idx] = match v {
                    NewValue::Computed(expr) => expr.eval(row)?,
                    NewValue::Fixed(value) => value.clone(),
                };
            }
            let new = self.db.validate_row(&def.name, new)?;
            let (rid, prev) = identity(&def, row)?;
            let fp = fingerprint(&rid, &new);
            batch.push(TxOp::Update { row_id: rid, table: def.name.clone(), fingerprint: fp, prev });
            updates.push((def.pk_of(row), new));
        }
        let n = updates.len();
        let height = self.commit(batch, principal, &mut ctx)?;
        for (pk, new) in updates {
            self.db.apply_row_update(&def.name, &pk, new)?;
        }
        let summary = MutationSummary { table: def.name.clone(), kind: "update".into(), rows_affected: n };
        Ok((Response::Mutation(summary), ctx.report(kind, n, if height.is_some() { n } else { 0 }, height)))
    }

    fn verified_insert_in(
        &mut self,
        q: &InsertQuery,
        principal: &PeerId,
        mut ctx: Ctx,
        kind: String,
    ) -> Result<(Response, VerificationReport), GatewayError> {
        let def = self.db.table(&q.table)?.clone();
        let positions: Vec<usize> = if q.columns.is_empty() {
            (0..def.arity()).collect()
        } else {
            let mut seen = HashSet::new();
            q.columns
                .iter()
                .map(|c| {
                    if !seen.insert(c) {
                        return Err(GatewayError::DuplicateColumn(c.clone()));
                    }
                    def.column_index(c).ok_or_else(|| {
                        StorageError::UnknownColumn { table: def.name.clone(), column: c.clone() }.into()
                    })
                })
                .collect::<Result<_, _>>()?
        };

        let source: Vec<Row> = match &q.source {
            InsertSource::Values(rows) => {
                let scope = Scope::new();
                let binder = Binder::identity(&scope);
                rows.iter()
                    .map(|exprs| exprs.iter().map(|e| Ok(binder.expr(e)?.eval(&[])?)).collect::<Result<Row, GatewayError>>())
                    .collect::<Result<_, _>>()?
            }
            InsertSource::Select(sq) => {
                if sq.base_tables().iter().any(|t| *t == def.name) {
                    return Err(GatewayError::SelfReferentialInsert(def.name.clone()));
                }
                let rs = self.verified_select_in(sq, &mut ctx)?;
                self.finish_check(&mut ctx, &kind)?;
                rs.rows
            }
        };
        ctx.tables.insert(def.name.clone());

        // every storage constraint is checked before anything reaches the ledger
        let mut rows = Vec::with_capacity(source.len());
        let mut keys = HashSet::new();
        for (i, values) in source.into_iter().enumerate() {
            if values.len() != positions.len() {
                return Err(StorageError::ArityError {
                    table: def.name.clone(),
                    expected: positions.len(),
                    found: values.len(),
                    line: Some(i + 1),
                }
                .into());
            }
            let mut full = vec![Value::Null; def.arity()];
            for (&p, v) in positions.iter().zip(values) {
                full[p] = v;
            }
            let row = self.db.validate_row(&def.name, full)?;
            let pk = def.pk_of(&row);
            if self.db.get_row(&def.name, &pk)?.is_some() || !keys.insert(pk.clone()) {
                return Err(StorageError::DuplicatePrimaryKey {
                    table: def.name.clone(),
                    key: crate::storage::format_key(&pk),
                }
                .into());
            }
            rows.push(row);
        }

        let n = rows.len();
        let mut batch = Vec::with_capacity(n + 1);
        for row in &rows {
            let (rid, fp) = identity(&def, row)?;
            batch.push(TxOp::Put { row_id: rid, table: def.name.clone(), fingerprint: fp });
        }
        if n > 0 {
            batch.push(TxOp::AdjustRowCount { table: def.name.clone(), delta: n as i64 });
        }
        let txs = batch.len();
        let height = self.commit(batch, principal, &mut ctx)?;
        for row in rows {
            self.db.apply_row_insert(Tuple::new(&def.name, row))?;
        }
        let summary = MutationSummary { table: def.name.clone(), kind: "insert".into(), rows_affected: n };
        Ok((Response::Mutation(summary), ctx.report(kind, n, txs, height)))
    }

    fn verified_delete_in(
        &mut self,
        q: &DeleteQuery,
        principal: &PeerId,
        mut ctx: Ctx,
        kind: String,
    ) -> Result<(Response, VerificationReport), GatewayError> {
        let def = self.db.table(&q.table)?.clone();
        let old = self.verified_select_in(&select_star(&def.name, q.selection.clone()), &mut ctx)?;
        self.finish_check(&mut ctx, &kind)?;

        let n = old.rows.len();
        let mut batch = Vec::with_capacity(n + 1);
        for row in &old.rows {
            let (rid, prev) = identity(&def, row)?;
            batch.push(TxOp::MarkDeleted { row_id: rid, table: def.name.clone(), prev });
        }
        if n > 0 {
            batch.push(TxOp::AdjustRowCount { table: def.name.clone(), delta: -(n as i64) });
        }
        let txs = batch.len();
        let height = self.commit(batch, principal, &mut ctx)?;
        for row in &old.rows {
            self.db.apply_row_delete(&def.name, &def.pk_of(row))?;
        }
        let summary = MutationSummary { table: def.name.clone(), kind: "delete".into(), rows_affected: n };
        Ok((Response::Mutation(summary), ctx.report(kind, n, txs, height)))
    }

    /// Compares each table's stored row count with the ledger's.
    pub fn audit_counts(&self) -> Vec<CountMismatch> {
        self.db
            .catalog()
            .tables()
            .filter_map(|def| {
                let db_count = self.db.row_count(&def.name).unwrap_or(0);
                let ledger_count = self.ledger.get_row_count(&def.name).ok();
                (ledger_count != Some(db_count as i64)).then(|| CountMismatch {
                    table: def.name.clone(),
                    db_count,
                    ledger_count,
                })
            })
            .collect()
    }

    /// Fingerprint-checks every stored tuple, then looks for ledger-active
    /// RowIDs with no stored tuple.
    pub fn audit_full(&self) -> Result<(Vec<TamperAlert>, Vec<MissingRow>), GatewayError> {
        let mut ctx = Ctx::new(None);
        let mut missing = Vec::new();
        for def in self.db.catalog().tables() {
            let mut present = HashSet::new();
            for row in self.db.rows(&def.name)? {
                present.insert(self.check_tuple(def, row, &mut ctx)?);
            }
            for rid in self.ledger.active_row_ids(&def.name) {
                if !present.contains(&rid) {
                    missing.push(MissingRow { row_id: rid, table: def.name.clone() });
                }
            }
        }
        self.log_alerts(&ctx.alerts)?;
        Ok((ctx.alerts, missing))
    }
}
