//! A loaded database plus ledger, and the operations every front end shares.

use std::fs;
use std::io::{BufReader, Write};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use verity_core::ledger::{RecordStatus, SystemClock};
use verity_core::sql::split_statements;
use verity_core::storage::csv::{CsvOptions, Reader};
use verity_core::storage::{format_key, parse_field, TableDef, Tuple};
use verity_core::verifier::{CountMismatch, MissingRow};
use verity_core::{Database, Gateway, GatewayError, Ledger, PeerId, Response, RowId, SimulatedLedger, TamperAlert, Value};

use crate::config::{Format, SessionConfig};
use crate::output;

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_TAMPER: u8 = 2;

/// How a statement or check ended, when it did not fail outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Clean,
    Tampered,
}

impl Status {
    pub fn code(self) -> ExitCode {
        ExitCode::from(match self {
            Status::Clean => EXIT_OK,
            Status::Tampered => EXIT_TAMPER,
        })
    }
}

pub struct Session {
    pub cfg: SessionConfig,
    pub gateway: Gateway,
    pub principal: PeerId,
}

fn csv_options(cfg: &SessionConfig) -> CsvOptions {
    CsvOptions { null_literal: cfg.null_literal.clone() }
}

/// Loads DDL and CSVs, bootstraps, then writes the ledger and table snapshot.
/// Nothing is written unless every step before it succeeded.
pub fn init(cfg: &SessionConfig, out: &mut impl Write) -> anyhow::Result<()> {
    if cfg.ledger.exists() {
        bail!("{} already exists; refusing to bootstrap over an existing ledger", cfg.ledger.display());
    }
    let ddl = fs::read_to_string(&cfg.ddl).with_context(|| format!("reading {}", cfg.ddl.display()))?;
    let mut db = Database::new();
    db.create_tables(&ddl).with_context(|| format!("in {}", cfg.ddl.display()))?;
    let names: Vec<String> = db.catalog().names().map(str::to_string).collect();
    for t in &names {
        let path = cfg.csv_dir.join(format!("{t}.csv"));
        if !path.exists() {
            eprintln!("warning: no {}; table {t} starts empty", path.display());
            continue;
        }
        let f = fs::File::open(&path).with_context(|| format!("opening {}", path.display()))?;
        db.load_csv(t, BufReader::new(f), &csv_options(cfg)).with_context(|| format!("loading {}", path.display()))?;
    }
    let principal = PeerId::new(&cfg.principal);
    let mut gateway = Gateway::new(db, SimulatedLedger::in_memory(cfg.peers));
    let counts = gateway.bootstrap(&principal)?;
    gateway.db().save_dir(&cfg.db_dir).with_context(|| format!("writing {}", cfg.db_dir.display()))?;
    let (_, mut ledger) = gateway.into_parts();
    ledger.persist_to(&cfg.ledger).with_context(|| format!("writing {}", cfg.ledger.display()))?;

    let cells: Vec<Vec<String>> = counts.iter().map(|(t, n)| vec![t.clone(), n.to_string()]).collect();
    output::grid(out, &["table".into(), "tuples".into()], &cells)?;
    writeln!(out, "Total {}", counts.values().sum::<usize>())?;
    writeln!(out, "ledger head height {}, {} peers, quorum {}", ledger.head_height(), cfg.peers, ledger.quorum())?;
    Ok(())
}

impl Session {
    pub fn open(cfg: SessionConfig) -> anyhow::Result<Session> {
        if !cfg.ledger.exists() {
            bail!("no ledger at {}; run `verity init` first", cfg.ledger.display());
        }
        let ledger = SimulatedLedger::open(&cfg.ledger, Arc::new(SystemClock))
            .with_context(|| format!("opening {}", cfg.ledger.display()))?;
        if let Some(h) = ledger.damaged_at() {
            eprintln!("warning: ledger damaged at block {h}; state reflects blocks before it and writes are refused");
        }
        let db = Database::load_dir(&cfg.db_dir).with_context(|| format!("loading {}", cfg.db_dir.display()))?;
        let mut gateway = Gateway::new(db, ledger);
        if let Some(log) = &cfg.audit_log {
            gateway = gateway.with_audit_log(log);
        }
        let principal = PeerId::new(&cfg.principal);
        Ok(Session { cfg, gateway, principal })
    }

    pub fn format(&self) -> Format {
        self.cfg.format
    }

    fn save(&self) -> anyhow::Result<()> {
        self.gateway.db().save_dir(&self.cfg.db_dir).with_context(|| format!("writing {}", self.cfg.db_dir.display()))
    }

    /// Runs one statement through the gateway and prints the outcome.
    pub fn execute(&mut self, sql: &str, out: &mut impl Write) -> anyhow::Result<Status> {
        let fmt = self.format();
        match self.gateway.process(sql, &self.principal) {
            Ok((Response::Rows(rs), report)) => {
                output::rows(out, fmt, &rs)?;
                output::report(out, fmt, &report)?;
                Ok(Status::Clean)
            }
            Ok((Response::Mutation(m), report)) => {
                if m.rows_affected > 0 {
                    self.save()?;
                }
                output::mutation(out, fmt, &m)?;
                output::report(out, fmt, &report)?;
                Ok(Status::Clean)
            }
            Err(GatewayError::TamperDetected { alerts, report }) => {
                output::alerts(out, fmt, &alerts)?;
                output::report(out, fmt, &report)?;
                Ok(Status::Tampered)
            }
            Err(e) => Err(e.into()),
        }
    }

    /// Runs each statement of a script in order, stopping at the first one
    /// that does not come back clean.
    pub fn execute_script(&mut self, script: &str, out: &mut impl Write) -> anyhow::Result<Status> {
        let stmts = split_statements(script);
        if stmts.is_empty() {
            bail!("no statement given");
        }
        for (label, sql) in stmts {
            let label = label.map(|l| format!("{l}: ")).unwrap_or_default();
            match self.execute(&sql, out).with_context(|| format!("{label}{}", abbreviate(&sql)))? {
                Status::Clean => {}
                Status::Tampered => return Ok(Status::Tampered),
            }
        }
        Ok(Status::Clean)
    }

    pub fn audit_counts(&self, out: &mut impl Write) -> anyhow::Result<Status> {
        let mismatches = self.gateway.audit_counts();
        print_counts(out, self.format(), &mismatches)?;
        Ok(if mismatches.is_empty() { Status::Clean } else { Status::Tampered })
    }

    pub fn audit_full(&self, out: &mut impl Write) -> anyhow::Result<Status> {
        let (alerts, missing) = self.gateway.audit_full()?;
        print_full(out, self.format(), &alerts, &missing)?;
        Ok(if alerts.is_empty() && missing.is_empty() { Status::Clean } else { Status::Tampered })
    }

    pub fn verify_chain(&self, out: &mut impl Write) -> anyhow::Result<Status> {
        let report = self.gateway.ledger().verify_chain();
        match (self.format(), report.first_bad_height) {
            (Format::JsonLines, _) => writeln!(out, "{}", serde_json::json!({ "chain": report }))?,
            (Format::Table, None) => writeln!(out, "chain ok, head height {}", self.gateway.ledger().head_height())?,
            (Format::Table, Some(h)) => {
                writeln!(out, "chain broken at height {h} ({} block(s) stored)", report.blocks)?
            }
        }
        Ok(if report.is_ok() { Status::Clean } else { Status::Tampered })
    }

    pub fn history(&self, rid: &str, out: &mut impl Write) -> anyhow::Result<()> {
        let rid: RowId = rid.parse().with_context(|| format!("bad row id {rid:?}"))?;
        let ledger = self.gateway.ledger();
        let rec = ledger.get_current(&rid).with_context(|| format!("row id {rid} not on the ledger"))?;
        match self.format() {
            Format::JsonLines => writeln!(out, "{}", serde_json::json!({ "record": rec }))?,
            Format::Table => {
                let status = match rec.status {
                    RecordStatus::Active => "active",
                    RecordStatus::Deleted => "deleted",
                };
                writeln!(out, "{} in {}: {status}, version {}", rec.row_id, rec.table, rec.version)?;
                let cells: Vec<Vec<String>> = rec
                    .history
                    .iter()
                    .map(|h| vec![h.height.to_string(), format!("{:?}", h.kind).to_lowercase(), h.owner.to_string(), h.fingerprint.to_string()])
                    .collect();
                output::grid(out, &["block".into(), "change".into(), "owner".into(), "fingerprint".into()], &cells)?;
            }
        }
        Ok(())
    }

    pub fn tables(&self, out: &mut impl Write) -> anyhow::Result<()> {
        let db = self.gateway.db();
        let cells: Vec<Vec<String>> =
            db.catalog().names().map(|t| Ok(vec![t.to_string(), db.row_count(t)?.to_string()])).collect::<anyhow::Result<_>>()?;
        output::grid(out, &["table".into(), "tuples".into()], &cells)?;
        Ok(())
    }

    pub fn schema(&self, table: &str, out: &mut impl Write) -> anyhow::Result<()> {
        writeln!(out, "{};", self.gateway.db().table(table)?.to_ddl())?;
        Ok(())
    }

    /// Out-of-band edits that never reach the ledger.
    pub fn tamper(&mut self, table: &str, attack: &Attack, out: &mut impl Write) -> anyhow::Result<()> {
        let def = self.gateway.db().table(table)?.clone();
        let opts = csv_options(&self.cfg);
        let db = self.gateway.db_mut();
        match attack {
            Attack::Set { pk, column, value } => {
                let pk = parse_key(&def, pk)?;
                let col = def.column_index(column).with_context(|| format!("no column {column} in {table}"))?;
                let value = parse_cells(&def, &[col], value, &opts)?.remove(0);
                let old = db.get_row(table, &pk)?.with_context(|| format!("no row {} in {table}", format_key(&pk)))?[col].clone();
                db.raw_mutate(table, &pk, column, value.clone())?;
                writeln!(out, "tampered {table} {}: {column} {old} -> {value}", format_key(&pk))?;
            }
            Attack::Delete { pk } => {
                let pk = parse_key(&def, pk)?;
                db.raw_delete(table, &pk)?;
                writeln!(out, "deleted {table} {} behind the ledger's back", format_key(&pk))?;
            }
            Attack::Insert { row } => {
                let cols: Vec<usize> = (0..def.arity()).collect();
                let values = parse_cells(&def, &cols, row, &opts)?;
                let pk = def.pk_of(&values);
                db.raw_insert(Tuple::new(table, values))?;
                writeln!(out, "inserted {table} {} behind the ledger's back", format_key(&pk))?;
            }
        }
        self.save()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Attack {
    Set { pk: String, column: String, value: String },
    Delete { pk: String },
    Insert { row: String },
}

fn abbreviate(sql: &str) -> String {
    let one_line = sql.split_whitespace().collect::<Vec<_>>().join(" ");
    match one_line.char_indices().nth(60) {
        Some((i, _)) => format!("{}...", &one_line[..i]),
        None => one_line,
    }
}

/// Splits `text` as one CSV record and types each field for the given columns.
fn parse_cells(def: &TableDef, cols: &[usize], text: &str, opts: &CsvOptions) -> anyhow::Result<Vec<Value>> {
    let mut reader = Reader::new(text.as_bytes());
    let fields = match reader.next_record()? {
        Some((_, f)) => f,
        None => vec![],
    };
    if fields.len() != cols.len() {
        bail!("{}: expected {} value(s), got {}", def.name, cols.len(), fields.len());
    }
    cols.iter()
        .zip(fields)
        .map(|(&c, f)| if opts.is_null(&f) { Ok(Value::Null) } else { Ok(parse_field(def, c, &f.text)?) })
        .collect()
}

fn parse_key(def: &TableDef, pk: &str) -> anyhow::Result<Vec<Value>> {
    parse_cells(def, def.pk_indices(), pk, &CsvOptions::default())
}

fn print_counts(out: &mut impl Write, fmt: Format, mismatches: &[CountMismatch]) -> anyhow::Result<()> {
    match fmt {
        Format::JsonLines => {
            for m in mismatches {
                writeln!(out, "{}", serde_json::json!({ "count_mismatch": m }))?;
            }
        }
        Format::Table if mismatches.is_empty() => writeln!(out, "row counts match the ledger")?,
        Format::Table => {
            writeln!(out, "{} table(s) with row-count mismatches", mismatches.len())?;
            let cells: Vec<Vec<String>> = mismatches
                .iter()
                .map(|m| {
                    let ledger = m.ledger_count.map(|c| c.to_string()).unwrap_or_else(|| "none".into());
                    vec![m.table.clone(), m.db_count.to_string(), ledger]
                })
                .collect();
            output::grid(out, &["table".into(), "stored".into(), "ledger".into()], &cells)?;
        }
    }
    Ok(())
}

fn print_full(out: &mut impl Write, fmt: Format, alerts: &[TamperAlert], missing: &[MissingRow]) -> anyhow::Result<()> {
    if !alerts.is_empty() {
        output::alerts(out, fmt, alerts)?;
    }
    match fmt {
        Format::JsonLines => {
            for m in missing {
                writeln!(out, "{}", serde_json::json!({ "missing": m }))?;
            }
        }
        Format::Table => {
            for m in missing {
                writeln!(out, "MISSING {} {}: active on the ledger, absent from storage", m.table, m.row_id)?;
            }
            if alerts.is_empty() && missing.is_empty() {
                writeln!(out, "every stored tuple verifies and every active ledger record is present")?;
            }
        }
    }
    Ok(())
}
