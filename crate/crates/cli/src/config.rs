//! Session settings from a flat `key = value` file.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    JsonLines,
}

impl FromStr for Format {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Format> {
        match s {
            "table" => Ok(Format::Table),
            "json-lines" | "jsonl" => Ok(Format::JsonLines),
            other => bail!("unknown output format {other:?} (expected table or json-lines)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionConfig {
    pub ddl: PathBuf,
    pub csv_dir: PathBuf,
    pub ledger: PathBuf,
    /// Current table contents, rewritten after every change.
    pub db_dir: PathBuf,
    pub audit_log: Option<PathBuf>,
    pub peers: usize,
    pub principal: String,
    pub format: Format,
    pub null_literal: String,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            ddl: "schema.sql".into(),
            csv_dir: ".".into(),
            ledger: "verity.ledger".into(),
            db_dir: "verity.db".into(),
            audit_log: Some("alerts.tsv".into()),
            peers: 5,
            principal: "peer0".into(),
            format: Format::Table,
            null_literal: String::new(),
        }
    }
}

impl SessionConfig {
    /// Reads `path`; relative paths inside are taken from the file's directory.
    pub fn load(path: &Path) -> anyhow::Result<SessionConfig> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str, base: &Path) -> anyhow::Result<SessionConfig> {
        let mut cfg = SessionConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {}: expected key = value", n + 1);
            };
            let value = value.trim();
            match key.trim() {
                "ddl" => cfg.ddl = value.into(),
                "csv_dir" => cfg.csv_dir = value.into(),
                "ledger" => cfg.ledger = value.into(),
                "db_dir" => cfg.db_dir = value.into(),
                "audit_log" => cfg.audit_log = (!value.is_empty()).then(|| value.into()),
                "peers" => cfg.peers = value.parse().with_context(|| format!("line {}: peers", n + 1))?,
                "principal" => cfg.principal = value.to_string(),
                "format" => cfg.format = value.parse()?,
                "null_literal" => cfg.null_literal = value.to_string(),
                "quorum" => bail!("line {}: quorum is derived from peers and cannot be set", n + 1),
                other => bail!("line {}: unknown key {other:?}", n + 1),
            }
        }
        if cfg.peers == 0 {
            bail!("peers must be at least 1");
        }
        for p in [&mut cfg.ddl, &mut cfg.csv_dir, &mut cfg.ledger, &mut cfg.db_dir] {
            *p = base.join(&*p);
        }
        if let Some(p) = &mut cfg.audit_log {
            *p = base.join(&*p);
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_and_relative_paths() {
        let cfg = SessionConfig::parse(
            "# demo\nddl = s.sql\ncsv_dir=data\nledger = l.bin\npeers = 3\nprincipal = peer2\nformat = json-lines\nnull_literal = \\N\naudit_log =\n",
            Path::new("/w"),
        )
        .unwrap();
        assert_eq!(cfg.ddl, Path::new("/w/s.sql"));
        assert_eq!(cfg.csv_dir, Path::new("/w/data"));
        assert_eq!(cfg.db_dir, Path::new("/w/verity.db"));
        assert_eq!(cfg.peers, 3);
        assert_eq!(cfg.principal, "peer2");
        assert_eq!(cfg.format, Format::JsonLines);
        assert_eq!(cfg.null_literal, "\\N");
        assert_eq!(cfg.audit_log, None);
    }

    #[test]
    fn rejections() {
        let base = Path::new(".");
        assert!(SessionConfig::parse("peers = 0", base).is_err());
        assert!(SessionConfig::parse("quorum = 3", base).is_err());
        assert!(SessionConfig::parse("colour = red", base).is_err());
        assert!(SessionConfig::parse("just words", base).is_err());
        assert!(SessionConfig::parse("format = xml", base).is_err());
    }
}
