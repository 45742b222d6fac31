//! `verity`: a command-line gateway that checks every tuple a query reads or
//! writes against fingerprints held on a permissioned ledger.

mod config;
mod output;
mod repl;
mod session;

use std::fs;
use std::io::{self, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use verity_core::fixtures::{self, Scale};
use verity_core::harness;
use verity_core::Gateway;

use config::{Format, SessionConfig};
use session::{Attack, Session, Status, EXIT_ERROR};

#[derive(Parser)]
#[command(name = "verity", version, about = "Tamper-evident SQL over a ledger of row fingerprints")]
struct Cli {
    /// Session config file; defaults apply when absent.
    #[arg(long, global = true, env = "VERITY_CONFIG")]
    config: Option<PathBuf>,
    /// Output format: table or json-lines. Overrides the config.
    #[arg(long, global = true)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load the schema and CSVs and record every row on a new ledger.
    Init,
    /// Run SQL statements, stopping at the first error or tampering.
    Exec {
        sql: Option<String>,
        #[arg(short, long, conflicts_with = "sql")]
        file: Option<PathBuf>,
    },
    /// Interactive shell.
    Repl,
    /// Edit stored rows without going through the ledger.
    Tamper(TamperArgs),
    /// Compare storage with the ledger.
    Audit {
        #[arg(value_parser = ["counts", "full"])]
        mode: String,
    },
    /// Time a query file against a throwaway copy of the session.
    Bench {
        file: PathBuf,
        #[arg(long, default_value_t = harness::DEFAULT_RUNS)]
        runs: usize,
        /// Also write one JSON record per query here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inspect the ledger.
    Ledger {
        #[command(subcommand)]
        action: LedgerAction,
    },
    /// Write a synthetic TPC-H style schema and CSVs.
    Gen {
        #[arg(long)]
        out: PathBuf,
        /// 0.001, 0.002, 0.005 or 0.01.
        #[arg(long, default_value = "0.001")]
        scale: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct TamperArgs {
    table: String,
    /// Primary key as a CSV record, e.g. `7` or `1,3`.
    pk: Option<String>,
    /// COLUMN=VALUE to overwrite in place.
    #[arg(long, conflicts_with_all = ["delete", "insert"], requires = "pk")]
    set: Option<String>,
    #[arg(long, conflicts_with = "insert", requires = "pk")]
    delete: bool,
    /// A whole row as a CSV record.
    #[arg(long)]
    insert: Option<String>,
}

#[derive(Subcommand)]
enum LedgerAction {
    /// Check hashes, links and endorsements of every block.
    Verify,
    /// Changes recorded for one row id.
    History { row_id: String },
    /// Show one block.
    Block { height: u64 },
}

fn load_config(path: Option<&Path>, format: Option<Format>) -> anyhow::Result<SessionConfig> {
    let mut cfg = match path {
        Some(p) => SessionConfig::load(p)?,
        None => SessionConfig::default(),
    };
    if let Some(f) = format {
        cfg.format = f;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<Status> {
    let stdout = io::stdout();
    let out = &mut stdout.lock();
    // read lazily: gen needs no session, and its config may not exist yet
    let config = || load_config(cli.config.as_deref(), cli.format);
    match cli.command {
        Command::Gen { out: dir, scale, seed } => generate(&dir, &scale, seed, out).map(|_| Status::Clean),
        Command::Init => session::init(&config()?, out).map(|_| Status::Clean),
        Command::Exec { sql, file } => {
            let script = match (sql, file) {
                (Some(s), _) => s,
                (None, Some(f)) => fs::read_to_string(&f).with_context(|| format!("reading {}", f.display()))?,
                (None, None) => bail!("give SQL as an argument or with --file"),
            };
            Session::open(config()?)?.execute_script(&script, out)
        }
        Command::Repl => {
            let mut s = Session::open(config()?)?;
            let interactive = io::stdin().is_terminal();
            repl::run(&mut s, io::stdin().lock(), out, interactive)
        }
        Command::Tamper(t) => {
            let attack = match (t.set, t.delete, t.insert) {
                (Some(set), false, None) => {
                    let Some((column, value)) = set.split_once('=') else {
                        bail!("--set expects COLUMN=VALUE");
                    };
                    let pk = t.pk.expect("clap requires pk");
                    Attack::Set { pk, column: column.trim().to_string(), value: value.to_string() }
                }
                (None, true, None) => Attack::Delete { pk: t.pk.expect("clap requires pk") },
                (None, false, Some(row)) => Attack::Insert { row },
                _ => bail!("choose one of --set, --delete or --insert"),
            };
            Session::open(config()?)?.tamper(&t.table, &attack, out).map(|_| Status::Clean)
        }
        Command::Audit { mode } => {
            let s = Session::open(config()?)?;
            match mode.as_str() {
                "counts" => s.audit_counts(out),
                _ => s.audit_full(out),
            }
        }
        Command::Bench { file, runs, out: jsonl } => bench(Session::open(config()?)?, &file, runs, jsonl.as_deref(), out),
        Command::Ledger { action } => {
            let s = Session::open(config()?)?;
            match action {
                LedgerAction::Verify => s.verify_chain(out),
                LedgerAction::History { row_id } => s.history(&row_id, out).map(|_| Status::Clean),
                LedgerAction::Block { height } => show_block(&s, height, out).map(|_| Status::Clean),
            }
        }
    }
}

fn generate(dir: &Path, scale: &str, seed: u64, out: &mut impl Write) -> anyhow::Result<()> {
    let preset = Scale::preset(scale).with_context(|| format!("unknown scale {scale:?}"))?;
    let db = fixtures::generate(&preset, seed)?;
    db.save_dir(dir).with_context(|| format!("writing {}", dir.display()))?;
    let conf = dir.join("verity.conf");
    if !conf.exists() {
        fs::write(&conf, "ddl = schema.sql\ncsv_dir = .\nledger = verity.ledger\ndb_dir = verity.db\n")?;
    }
    writeln!(out, "wrote {} rows in {} tables to {}", db.total_rows(), db.catalog().len(), dir.display())?;
    Ok(())
}

fn bench(s: Session, file: &Path, runs: usize, jsonl: Option<&Path>, out: &mut impl Write) -> anyhow::Result<Status> {
    let text = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let queries: Vec<(String, String)> = verity_core::sql::split_statements(&text)
        .into_iter()
        .enumerate()
        .map(|(i, (label, sql))| (label.unwrap_or_else(|| format!("q{}", i + 1)), sql))
        .collect();
    // the copy never touches the session's files
    let mut g = Gateway::new(s.gateway.db().clone(), s.gateway.ledger().fork());
    let records = harness::run(&mut g, &queries, &s.principal, runs);

    let json: Vec<serde_json::Value> = records.iter().map(record_json).collect::<Result<_, _>>()?;
    if let Some(p) = jsonl {
        let mut f = io::BufWriter::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?);
        for j in &json {
            writeln!(f, "{j}")?;
        }
        f.flush()?;
    }
    match s.format() {
        Format::JsonLines => {
            for j in &json {
                writeln!(out, "{j}")?;
            }
        }
        Format::Table => {
            let ms = |d: std::time::Duration| format!("{:.3}", d.as_secs_f64() * 1e3);
            let cells: Vec<Vec<String>> = records
                .iter()
                .map(|r| {
                    vec![
                        r.query_id.clone(),
                        r.kind.clone(),
                        r.tuples().to_string(),
                        ms(r.mean),
                        r.per_tuple().map(ms).unwrap_or_default(),
                        ms(r.phases.ledger_lookup),
                        ms(r.phases.ledger_commit),
                        r.error.clone().unwrap_or_default(),
                    ]
                })
                .collect();
            let header = ["query", "kind", "tuples", "mean ms", "ms/tuple", "lookup ms", "commit ms", "error"];
            output::grid(out, &header.map(String::from), &cells)?;
        }
    }
    match harness::fit(&records) {
        Some(f) if s.format() == Format::JsonLines => writeln!(out, "{}", serde_json::json!({ "fit": f }))?,
        Some(f) => writeln!(
            out,
            "fit over {} queries: {:.3} us/tuple + {:.3} ms, r^2 {:.4}",
            f.points,
            f.slope * 1e6,
            f.intercept * 1e3,
            f.r_squared
        )?,
        None => writeln!(out, "too few queries with tuples for a fit")?,
    }
    Ok(Status::Clean)
}

/// The harness record plus derived per-tuple seconds.
fn record_json(r: &harness::BenchRecord) -> serde_json::Result<serde_json::Value> {
    let mut j = serde_json::to_value(r)?;
    j["per_tuple"] = r.per_tuple().map(|d| d.as_secs_f64()).into();
    Ok(j)
}

fn show_block(s: &Session, height: u64, out: &mut impl Write) -> anyhow::Result<()> {
    let ledger = s.gateway.ledger();
    let block = ledger.block(height).with_context(|| format!("no block {height}; head is {}", ledger.head_height()))?;
    match s.format() {
        Format::JsonLines => {
            let txs: Vec<serde_json::Value> = block
                .txs
                .iter()
                .map(|tx| {
                    serde_json::json!({
                        "op": tx.op.kind_name(),
                        "row_id": tx.op.row_id().map(|r| r.to_string()),
                        "owner": tx.owner.as_str(),
                        "endorsements": tx.endorsements.len(),
                    })
                })
                .collect();
            let b = serde_json::json!({
                "height": block.height,
                "hash": block.hash().to_string(),
                "prev_hash": block.prev_hash.to_string(),
                "timestamp": block.timestamp,
                "txs": txs,
            });
            writeln!(out, "{}", serde_json::json!({ "block": b }))?
        }
        Format::Table => {
            writeln!(out, "block {height} hash {}", block.hash())?;
            let cells: Vec<Vec<String>> = block
                .txs
                .iter()
                .map(|tx| {
                    let rid = tx.op.row_id().map(|r| r.to_string()).unwrap_or_default();
                    vec![tx.op.kind_name().to_string(), rid, tx.endorsements.len().to_string()]
                })
                .collect();
            output::grid(out, &["op".into(), "row id".into(), "endorsements".into()], &cells)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(status) => status.code(),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
