//! Embedded relational engine: catalog, typed in-memory tables keyed by
//! primary key, CSV ingestion and nested-loop SELECT execution.

mod catalog;
pub mod csv;
mod exec;

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;

pub use catalog::{Catalog, ColumnDef, TableDef};
pub use exec::ResultSet;

use crate::eval::{BindError, EvalError};
use crate::sql::{parse_create_table, parse_ddl_script, ParseError};
use crate::types::{is_iso_date, DataType, Decimal, Row, Value};
use self::csv::{CsvError, CsvOptions, Reader};

/// Unit separator: never allowed inside stored text.
pub const FIELD_SEPARATOR: char = '\u{1f}';

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StorageError {
    #[error("table {0} already exists")]
    DuplicateTable(String),
    #[error("unknown table {0}")]
    UnknownTable(String),
    #[error("unknown column {table}.{column}")]
    UnknownColumn { table: String, column: String },
    #[error("column {table}.{column} declared twice")]
    DuplicateColumn { table: String, column: String },
    #[error("column {column} has unsupported type {ty}")]
    BadType { column: String, ty: String },
    #[error("table {0} has no columns")]
    EmptyTable(String),
    #[error("bad DDL: {0}")]
    Ddl(ParseError),
    #[error("{table}.{column}: cannot store {value:?} as {expected}")]
    TypeError { table: String, column: String, value: String, expected: DataType },
    #[error("{table}.{column}: text contains the 0x1F separator")]
    SeparatorInText { table: String, column: String },
    #[error("duplicate primary key {key} in {table}")]
    DuplicatePrimaryKey { table: String, key: String },
    #[error("NULL in primary key column {table}.{column}")]
    NullPrimaryKey { table: String, column: String },
    #[error("{table}: expected {expected} values, got {found}{}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    ArityError { table: String, expected: usize, found: usize, line: Option<usize> },
    #[error("{table}: CSV header {found:?} does not match columns {expected:?}")]
    HeaderMismatch { table: String, expected: Vec<String>, found: Vec<String> },
    #[error("no row with key {key} in {table}")]
    NoSuchRow { table: String, key: String },
    #[error("{0}")]
    Csv(#[from] CsvError),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Bind(#[from] BindError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl From<std::io::Error> for StorageError {
    fn from(e: std::io::Error) -> Self {
        StorageError::Io(e.to_string())
    }
}

/// A base-table row together with the table it belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tuple {
    pub table: String,
    pub values: Row,
}

impl Tuple {
    pub fn new(table: &str, values: Row) -> Tuple {
        Tuple { table: table.to_string(), values }
    }
}

pub fn format_key(key: &[Value]) -> String {
    let parts: Vec<String> = key.iter().map(Value::to_string).collect();
    format!("({})", parts.join(", "))
}

/// Converts `v` to the declared column type, rejecting lossy conversions.
pub fn coerce(def: &TableDef, col: usize, v: Value) -> Result<Value, StorageError> {
    let column = &def.columns[col];
    let bad = |v: &Value| StorageError::TypeError {
        table: def.name.clone(),
        column: column.name.clone(),
        value: v.to_string(),
        expected: column.ty,
    };
    let out = match (column.ty, v) {
        (_, Value::Null) => Value::Null,
        (DataType::Integer, Value::Integer(i)) => Value::Integer(i),
        (DataType::Integer, Value::Decimal(d)) => d.to_i64_exact().map(Value::Integer).ok_or_else(|| bad(&Value::Decimal(d)))?,
        (DataType::Decimal, Value::Integer(i)) => Value::Decimal(Decimal::from_i64(i)),
        (DataType::Decimal, Value::Decimal(d)) => Value::Decimal(d),
        (DataType::Text, Value::Text(s) | Value::Date(s)) => Value::Text(s),
        (DataType::Date, Value::Text(s) | Value::Date(s)) if is_iso_date(&s) => Value::Date(s),
        (_, other) => return Err(bad(&other)),
    };
    if let Value::Text(s) = &out {
        if s.contains(FIELD_SEPARATOR) {
            return Err(StorageError::SeparatorInText { table: def.name.clone(), column: column.name.clone() });
        }
    }
    Ok(out)
}

/// Parses CSV field text as the declared column type.
pub fn parse_field(def: &TableDef, col: usize, text: &str) -> Result<Value, StorageError> {
    let column = &def.columns[col];
    let v = match column.ty {
        DataType::Integer => text.parse::<i64>().map(Value::Integer).ok(),
        DataType::Decimal => text.parse::<Decimal>().map(Value::Decimal).ok(),
        DataType::Text => Some(Value::Text(text.to_string())),
        DataType::Date => is_iso_date(text).then(|| Value::Date(text.to_string())),
    };
    match v {
        Some(v) => coerce(def, col, v),
        None => Err(StorageError::TypeError {
            table: def.name.clone(),
            column: column.name.clone(),
            value: text.to_string(),
            expected: column.ty,
        }),
    }
}

type TableRows = BTreeMap<Vec<Value>, Row>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Database {
    catalog: Catalog,
    tables: BTreeMap<String, TableRows>,
}

impl Database {
    pub fn new() -> Database {
        Database::default()
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn create_table(&mut self, ddl: &str) -> Result<&TableDef, StorageError> {
        let def = TableDef::from_ast(&parse_create_table(ddl)?)?;
        self.add_table(def)
    }

    pub fn add_table(&mut self, def: TableDef) -> Result<&TableDef, StorageError> {
        let name = def.name.clone();
        self.catalog.add(def)?;
        self.tables.insert(name.clone(), BTreeMap::new());
        self.catalog.table(&name)
    }

    /// Runs every `CREATE TABLE` in a `;`-separated script. Nothing is
    /// created when any statement fails.
    pub fn create_tables(&mut self, script: &str) -> Result<Vec<String>, StorageError> {
        let defs = parse_ddl_script(script)?.iter().map(TableDef::from_ast).collect::<Result<Vec<_>, _>>()?;
        let mut trial = self.catalog.clone();
        for d in &defs {
            trial.add(d.clone())?;
        }
        let names = defs.iter().map(|d| d.name.clone()).collect();
        for d in defs {
            self.add_table(d)?;
        }
        Ok(names)
    }

    pub fn table(&self, name: &str) -> Result<&TableDef, StorageError> {
        self.catalog.table(name)
    }

    fn rows_mut(&mut self, table: &str) -> Result<(&TableDef, &mut TableRows), StorageError> {
        let def = self.catalog.table(table)?;
        let rows = self.tables.get_mut(table).ok_or_else(|| StorageError::UnknownTable(table.to_string()))?;
        Ok((def, rows))
    }

    /// Rows of `table` in primary-key order.
    pub fn rows(&self, table: &str) -> Result<impl Iterator<Item = &Row> + '_, StorageError> {
        self.tables.get(table).map(|t| t.values()).ok_or_else(|| StorageError::UnknownTable(table.to_string()))
    }

    pub fn row_count(&self, table: &str) -> Result<usize, StorageError> {
        self.tables.get(table).map(BTreeMap::len).ok_or_else(|| StorageError::UnknownTable(table.to_string()))
    }

    pub fn get_row(&self, table: &str, pk: &[Value]) -> Result<Option<&Row>, StorageError> {
        Ok(self.tables.get(table).ok_or_else(|| StorageError::UnknownTable(table.to_string()))?.get(pk))
    }

    pub fn total_rows(&self) -> usize {
        self.tables.values().map(BTreeMap::len).sum()
    }

    /// Type-checks a full row for `table`, returning it in stored form.
    pub fn validate_row(&self, table: &str, values: Row) -> Result<Row, StorageError> {
        validate(self.catalog.table(table)?, values, None)
    }

    /// Loads a CSV stream whose header names the table's columns in order.
    /// Either every row is inserted or none is.
    pub fn load_csv<R: BufRead>(&mut self, table: &str, input: R, opts: &CsvOptions) -> Result<usize, StorageError> {
        let def = self.catalog.table(table)?;
        let mut reader = Reader::new(input);
        let Some((_, header)) = reader.next_record()? else {
            return Err(StorageError::HeaderMismatch {
                table: table.to_string(),
                expected: def.column_names().map(str::to_string).collect(),
                found: vec![],
            });
        };
        let found: Vec<String> = header.iter().map(|f| f.text.trim().to_ascii_lowercase()).collect();
        if !found.iter().map(String::as_str).eq(def.column_names()) {
            return Err(StorageError::HeaderMismatch {
                table: table.to_string(),
                expected: def.column_names().map(str::to_string).collect(),
                found,
            });
        }
        let existing = &self.tables[table];
        let mut staged: Vec<(Vec<Value>, Row)> = Vec::new();
        let mut seen = HashSet::new();
        while let Some((line, fields)) = reader.next_record()? {
            if fields.len() != def.arity() {
                return Err(StorageError::ArityError {
                    table: table.to_string(),
                    expected: def.arity(),
                    found: fields.len(),
                    line: Some(line),
                });
            }
            let values = fields
                .iter()
                .enumerate()
                .map(|(i, f)| if opts.is_null(f) { Ok(Value::Null) } else { parse_field(def, i, &f.text) })
                .collect::<Result<Row, _>>()?;
            let row = validate(def, values, Some(line))?;
            let pk = def.pk_of(&row);
            if existing.contains_key(&pk) || !seen.insert(pk.clone()) {
                return Err(StorageError::DuplicatePrimaryKey { table: table.to_string(), key: format_key(&pk) });
            }
            staged.push((pk, row));
        }
        let n = staged.len();
        self.tables.get_mut(table).expect("table exists").extend(staged);
        Ok(n)
    }

    /// Writes the table as CSV with a header row, in primary-key order.
    pub fn write_csv<W: Write>(&self, table: &str, out: &mut W, opts: &CsvOptions) -> Result<(), StorageError> {
        let def = self.catalog.table(table)?;
        let header: Vec<Option<&str>> = def.column_names().map(Some).collect();
        csv::write_record(out, &header, opts)?;
        for row in self.rows(table)? {
            let texts: Vec<Option<String>> =
                row.iter().map(|v| if v.is_null() { None } else { Some(v.to_string()) }).collect();
            let refs: Vec<Option<&str>> = texts.iter().map(|t| t.as_deref()).collect();
            csv::write_record(out, &refs, opts)?;
        }
        Ok(())
    }

    /// Writes `schema.sql` plus one `<table>.csv` per table. Each file is
    /// written beside its target and renamed into place.
    pub fn save_dir(&self, dir: &Path) -> Result<(), StorageError> {
        fs::create_dir_all(dir)?;
        let ddl: String = self.catalog.tables().map(|t| t.to_ddl() + ";\n").collect();
        replace_file(&dir.join("schema.sql"), ddl.as_bytes())?;
        for t in self.catalog.names() {
            let mut buf = Vec::new();
            self.write_csv(t, &mut buf, &CsvOptions::default())?;
            replace_file(&dir.join(format!("{t}.csv")), &buf)?;
        }
        Ok(())
    }

    /// Reads a directory written by [`Database::save_dir`].
    pub fn load_dir(dir: &Path) -> Result<Database, StorageError> {
        let mut db = Database::new();
        db.create_tables(&fs::read_to_string(dir.join("schema.sql"))?)?;
        let names: Vec<String> = db.catalog.names().map(str::to_string).collect();
        for t in names {
            let f = fs::File::open(dir.join(format!("{t}.csv")))?;
            db.load_csv(&t, io::BufReader::new(f), &CsvOptions::default())?;
        }
        Ok(db)
    }

    pub fn apply_row_insert(&mut self, t: Tuple) -> Result<(), StorageError> {
        let (def, rows) = self.rows_mut(&t.table)?;
        let row = validate(def, t.values, None)?;
        let pk = def.pk_of(&row);
        if rows.contains_key(&pk) {
            return Err(StorageError::DuplicatePrimaryKey { table: t.table, key: format_key(&pk) });
        }
        rows.insert(pk, row);
        Ok(())
    }

    /// Replaces the row stored under `pk`. The new row may carry a different
    /// key as long as that key is free.
    pub fn apply_row_update(&mut self, table: &str, pk: &[Value], new_values: Row) -> Result<(), StorageError> {
        let (def, rows) = self.rows_mut(table)?;
        let row = validate(def, new_values, None)?;
        if !rows.contains_key(pk) {
            return Err(StorageError::NoSuchRow { table: table.to_string(), key: format_key(pk) });
        }
        let new_pk = def.pk_of(&row);
        if new_pk.as_slice() != pk {
            if rows.contains_key(&new_pk) {
                return Err(StorageError::DuplicatePrimaryKey { table: table.to_string(), key: format_key(&new_pk) });
            }
            rows.remove(pk);
        }
        rows.insert(new_pk, row);
        Ok(())
    }

    pub fn apply_row_delete(&mut self, table: &str, pk: &[Value]) -> Result<Row, StorageError> {
        let (_, rows) = self.rows_mut(table)?;
        rows.remove(pk).ok_or_else(|| StorageError::NoSuchRow { table: table.to_string(), key: format_key(pk) })
    }

    /// Attacker backdoor: sets one column of one row with no ledger involvement.
    pub fn raw_mutate(&mut self, table: &str, pk: &[Value], column: &str, value: Value) -> Result<(), StorageError> {
        let def = self.catalog.table(table)?;
        let col = def
            .column_index(column)
            .ok_or_else(|| StorageError::UnknownColumn { table: table.to_string(), column: column.to_string() })?;
        let mut row = self
            .get_row(table, pk)?
            .cloned()
            .ok_or_else(|| StorageError::NoSuchRow { table: table.to_string(), key: format_key(pk) })?;
        row[col] = value;
        self.apply_row_update(table, pk, row)
    }

    /// Attacker backdoor: removes a row with no ledger involvement.
    pub fn raw_delete(&mut self, table: &str, pk: &[Value]) -> Result<Row, StorageError> {
        self.apply_row_delete(table, pk)
    }

    /// Attacker backdoor: adds a row with no ledger involvement.
    pub fn raw_insert(&mut self, t: Tuple) -> Result<(), StorageError> {
        self.apply_row_insert(t)
    }
}

fn validate(def: &TableDef, values: Row, line: Option<usize>) -> Result<Row, StorageError> {
    if values.len() != def.arity() {
        return Err(StorageError::ArityError {
            table: def.name.clone(),
            expected: def.arity(),
            found: values.len(),
            line,
        });
    }
    let row = values.into_iter().enumerate().map(|(i, v)| coerce(def, i, v)).collect::<Result<Row, _>>()?;
    for &k in def.pk_indices() {
        if row[k].is_null() {
            return Err(StorageError::NullPrimaryKey { table: def.name.clone(), column: def.columns[k].name.clone() });
        }
    }
    Ok(row)
}

fn replace_file(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests;
