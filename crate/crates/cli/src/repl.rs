//! Line-oriented shell. SQL accumulates until a line ends with `;`; lines
//! starting with `.` are meta-commands.

use std::io::{BufRead, Write};

use crate::session::{Session, Status};

const HELP: &str = "\
.tables                 tables and row counts
.schema TABLE           DDL for a table
.audit counts|full      compare storage with the ledger
.ledger verify          check the hash chain and signatures
.ledger history ROWID   changes recorded for one row
.help                   this text
.quit                   leave
";

/// Returns the worst status seen. Errors are printed and the loop goes on.
pub fn run(session: &mut Session, input: impl BufRead, out: &mut impl Write, interactive: bool) -> anyhow::Result<Status> {
    let mut worst = Status::Clean;
    let mut buf = String::new();
    let prompt = |out: &mut dyn Write, cont: bool| -> std::io::Result<()> {
        if interactive {
            write!(out, "{}", if cont { "   ...> " } else { "verity> " })?;
            out.flush()?;
        }
        Ok(())
    };
    prompt(out, false)?;
    for line in input.lines() {
        let line = line?;
        let trimmed = line.trim();
        if buf.is_empty() && trimmed.starts_with('.') {
            match meta(session, trimmed, out) {
                Ok(Some(Status::Tampered)) => worst = Status::Tampered,
                Ok(Some(Status::Clean)) => {}
                Ok(None) => return Ok(worst),
                Err(e) => writeln!(out, "error: {e:#}")?,
            }
            prompt(out, false)?;
            continue;
        }
        if !trimmed.is_empty() {
            buf.push_str(&line);
            buf.push('\n');
        }
        if trimmed.ends_with(';') {
            let sql = std::mem::take(&mut buf);
            match session.execute_script(&sql, out) {
                Ok(Status::Tampered) => worst = Status::Tampered,
                Ok(Status::Clean) => {}
                Err(e) => writeln!(out, "error: {e:#}")?,
            }
        }
        prompt(out, !buf.is_empty())?;
    }
    if !buf.trim().is_empty() {
        writeln!(out, "error: input ended inside a statement (missing ';')")?;
    }
    Ok(worst)
}

/// `None` means quit.
fn meta(session: &mut Session, line: &str, out: &mut impl Write) -> anyhow::Result<Option<Status>> {
    let words: Vec<&str> = line.split_whitespace().collect();
    let clean = Some(Status::Clean);
    match words.as_slice() {
        [".quit"] | [".exit"] => Ok(None),
        [".help"] => {
            out.write_all(HELP.as_bytes())?;
            Ok(clean)
        }
        [".tables"] => session.tables(out).map(|_| clean),
        [".schema", t] => session.schema(t, out).map(|_| clean),
        [".audit", "counts"] => session.audit_counts(out).map(Some),
        [".audit", "full"] => session.audit_full(out).map(Some),
        [".ledger", "verify"] => session.verify_chain(out).map(Some),
        [".ledger", "history", rid] => session.history(rid, out).map(|_| clean),
        _ => anyhow::bail!("unknown command {line:?}; try .help"),
    }
}
