use std::io::{self, Write};

use serde_json::{json, Map};
use verity_core::storage::ResultSet;
use verity_core::verifier::{MutationSummary, VerificationReport};
use verity_core::{TamperAlert, Value};

use crate::config::Format;

pub fn value_json(v: &Value) -> serde_json::Value {
    match v {
        Value::Null => serde_json::Value::Null,
        Value::Integer(i) => json!(i),
        // decimals keep their exact text
        Value::Decimal(d) => json!(d.to_string()),
        Value::Text(s) | Value::Date(s) => json!(s),
    }
}

/// Left-aligned text grid with a header rule.
pub fn grid(w: &mut impl Write, header: &[String], rows: &[Vec<String>]) -> io::Result<()> {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (i, c) in r.iter().enumerate() {
            widths[i] = widths[i].max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, &n)| format!("{c:<n$}")).collect();
        padded.join(" | ").trim_end().to_string()
    };
    writeln!(w, "{}", line(header))?;
    writeln!(w, "{}", widths.iter().map(|&n| "-".repeat(n)).collect::<Vec<_>>().join("-+-"))?;
    for r in rows {
        writeln!(w, "{}", line(r))?;
    }
    Ok(())
}

pub fn rows(w: &mut impl Write, fmt: Format, rs: &ResultSet) -> io::Result<()> {
    match fmt {
        Format::Table => {
            let cells: Vec<Vec<String>> = rs.rows.iter().map(|r| r.iter().map(|v| v.to_string()).collect()).collect();
            grid(w, &rs.columns, &cells)?;
            writeln!(w, "({} row{})", rs.rows.len(), if rs.rows.len() == 1 { "" } else { "s" })
        }
        Format::JsonLines => {
            for r in &rs.rows {
                // duplicate output names keep the last value, as JSON objects must
                let obj: Map<String, serde_json::Value> =
                    rs.columns.iter().cloned().zip(r.iter().map(value_json)).collect();
                writeln!(w, "{}", serde_json::Value::Object(obj))?;
            }
            Ok(())
        }
    }
}

pub fn mutation(w: &mut impl Write, fmt: Format, m: &MutationSummary) -> io::Result<()> {
    match fmt {
        Format::Table => writeln!(w, "{} {}: {} row(s) affected", m.kind, m.table, m.rows_affected),
        Format::JsonLines => writeln!(w, "{}", json!({ "mutation": m })),
    }
}

pub fn report(w: &mut impl Write, fmt: Format, r: &VerificationReport) -> io::Result<()> {
    match fmt {
        Format::Table => {
            let block = r.block_height.map(|h| format!(", block {h}")).unwrap_or_default();
            writeln!(
                w,
                "-- {:?} [{}] tables {}: {} tuple(s) checked, {} mutated, {} ledger tx(s){block}; {:.3} ms (lookup {:.3} ms, commit {:.3} ms)",
                r.outcome,
                r.query_kind,
                r.tables_touched.join(","),
                r.tuples_checked,
                r.tuples_mutated,
                r.ledger_txs_committed,
                r.elapsed.total().as_secs_f64() * 1e3,
                r.elapsed.ledger_lookup.as_secs_f64() * 1e3,
                r.elapsed.ledger_commit.as_secs_f64() * 1e3,
            )
        }
        Format::JsonLines => writeln!(w, "{}", json!({ "report": r })),
    }
}

pub fn alerts(w: &mut impl Write, fmt: Format, alerts: &[TamperAlert]) -> io::Result<()> {
    match fmt {
        Format::Table => {
            writeln!(w, "TAMPER DETECTED: {} tuple(s) fail verification", alerts.len())?;
            for a in alerts {
                writeln!(w, "  {} {} expected {} computed {}", a.table, a.row_id, a.expected, a.computed)?;
            }
            Ok(())
        }
        Format::JsonLines => {
            for a in alerts {
                writeln!(w, "{}", json!({ "alert": a }))?;
            }
            Ok(())
        }
    }
}
