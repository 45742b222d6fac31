use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::{PeerId, TxOp};
use crate::fingerprint::{Fingerprint, RowId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordStatus {
    Active,
    Deleted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChangeKind {
    Put,
    Update,
    Delete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HistoryEntry {
    pub kind: ChangeKind,
    /// Fingerprint in force after the change; a deletion keeps the last one.
    pub fingerprint: Fingerprint,
    pub owner: PeerId,
    pub height: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FingerprintRecord {
    pub row_id: RowId,
    pub table: String,
    pub status: RecordStatus,
    pub fingerprint: Fingerprint,
    pub owner: PeerId,
    pub version: u64,
    pub history: Vec<HistoryEntry>,
}

impl FingerprintRecord {
    pub fn is_active(&self) -> bool {
        self.status == RecordStatus::Active
    }
}

/// Why a peer refuses to endorse a transaction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Rejection {
    Stale { row_id: RowId, expected: Fingerprint, actual: Option<(RecordStatus, Fingerprint)> },
    Duplicate(RowId),
    Invalid(String),
}

/// Read access to committed state, possibly with uncommitted effects on top.
pub(crate) trait View {
    fn row(&self, rid: &RowId) -> Option<(RecordStatus, Fingerprint)>;
    fn count(&self, table: &str) -> Option<i64>;
}

pub(crate) fn check(view: &impl View, op: &TxOp) -> Result<(), Rejection> {
    match op {
        TxOp::Put { row_id, .. } => match view.row(row_id) {
            Some((RecordStatus::Active, _)) => Err(Rejection::Duplicate(*row_id)),
            _ => Ok(()),
        },
        TxOp::Update { row_id, prev, .. } | TxOp::MarkDeleted { row_id, prev, .. } => match view.row(row_id) {
            Some((RecordStatus::Active, fp)) if fp == *prev => Ok(()),
            actual => Err(Rejection::Stale { row_id: *row_id, expected: *prev, actual }),
        },
        TxOp::AdjustRowCount { table, delta } => {
            let count = view.count(table).ok_or_else(|| Rejection::Invalid(format!("table {table} has no row count")))?;
            match count.checked_add(*delta) {
                Some(n) if n >= 0 => Ok(()),
                _ => Err(Rejection::Invalid(format!("row count of {table} would become {count} + {delta}"))),
            }
        }
        TxOp::InitRowCount { table, count } => {
            if view.count(table).is_some() {
                Err(Rejection::Invalid(format!("row count of {table} already initialized")))
            } else if *count < 0 {
                Err(Rejection::Invalid(format!("negative initial row count {count}")))
            } else {
                Ok(())
            }
        }
    }
}

/// Records and row counts as of the chain head.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WorldState {
    pub(crate) records: HashMap<RowId, FingerprintRecord>,
    pub(crate) counts: BTreeMap<String, i64>,
}

impl View for WorldState {
    fn row(&self, rid: &RowId) -> Option<(RecordStatus, Fingerprint)> {
        self.records.get(rid).map(|r| (r.status, r.fingerprint))
    }

    fn count(&self, table: &str) -> Option<i64> {
        self.counts.get(table).copied()
    }
}

impl WorldState {
    pub fn record(&self, rid: &RowId) -> Option<&FingerprintRecord> {
        self.records.get(rid)
    }

    pub fn records(&self) -> impl Iterator<Item = &FingerprintRecord> {
        self.records.values()
    }

    pub fn row_counts(&self) -> &BTreeMap<String, i64> {
        &self.counts
    }

    /// Applies a transaction already known to pass [`check`].
    pub(crate) fn apply(&mut self, op: &TxOp, owner: &PeerId, height: u64) {
        let entry = |kind, fingerprint| HistoryEntry { kind, fingerprint, owner: owner.clone(), height };
        match op {
            TxOp::Put { row_id, table, fingerprint } => {
                let h = entry(ChangeKind::Put, *fingerprint);
                let rec = self.records.entry(*row_id).or_insert_with(|| FingerprintRecord {
                    row_id: *row_id,
                    table: table.clone(),
                    status: RecordStatus::Active,
                    fingerprint: *fingerprint,
                    owner: owner.clone(),
                    version: 0,
                    history: Vec::new(),
                });
                rec.table = table.clone();
                rec.status = RecordStatus::Active;
                push(rec, h);
            }
            TxOp::Update { row_id, fingerprint, .. } => {
                let rec = self.records.get_mut(row_id).expect("checked");
                push(rec, entry(ChangeKind::Update, *fingerprint));
            }
            TxOp::MarkDeleted { row_id, .. } => {
                let rec = self.records.get_mut(row_id).expect("checked");
                rec.status = RecordStatus::Deleted;
                let fp = rec.fingerprint;
                push(rec, entry(ChangeKind::Delete, fp));
            }
            TxOp::AdjustRowCount { table, delta } => *self.counts.get_mut(table).expect("checked") += delta,
            TxOp::InitRowCount { table, count } => {
                self.counts.insert(table.clone(), *count);
            }
        }
    }
}

fn push(rec: &mut FingerprintRecord, h: HistoryEntry) {
    rec.fingerprint = h.fingerprint;
    rec.owner = h.owner.clone();
    rec.history.push(h);
    rec.version = rec.history.len() as u64;
}

/// Uncommitted effects of a batch prefix, layered over committed state.
pub(crate) struct Overlay<'a> {
    base: &'a WorldState,
    rows: HashMap<RowId, (RecordStatus, Fingerprint)>,
    counts: HashMap<String, i64>,
}

impl<'a> Overlay<'a> {
    pub fn new(base: &'a WorldState) -> Overlay<'a> {
        Overlay { base, rows: HashMap::new(), counts: HashMap::new() }
    }

    pub fn try_apply(&mut self, op: &TxOp) -> Result<(), Rejection> {
        check(self, op)?;
        match op {
            TxOp::Put { row_id, fingerprint, .. } | TxOp::Update { row_id, fingerprint, .. } => {
                self.rows.insert(*row_id, (RecordStatus::Active, *fingerprint));
            }
            TxOp::MarkDeleted { row_id, prev, .. } => {
                self.rows.insert(*row_id, (RecordStatus::Deleted, *prev));
            }
            TxOp::AdjustRowCount { table, delta } => {
                let n = self.count(table).expect("checked") + delta;
                self.counts.insert(table.clone(), n);
            }
            TxOp::InitRowCount { table, count } => {
                self.counts.insert(table.clone(), *count);
            }
        }
        Ok(())
    }
}

impl View for Overlay<'_> {
    fn row(&self, rid: &RowId) -> Option<(RecordStatus, Fingerprint)> {
        self.rows.get(rid).copied().or_else(|| self.base.row(rid))
    }

    fn count(&self, table: &str) -> Option<i64> {
        self.counts.get(table).copied().or_else(|| self.base.count(table))
    }
}
