use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use super::StorageError;
use crate::sql::{CreateTable, ParseError};
use crate::types::{DataType, Value};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ColumnDef {
    pub name: String,
    pub ty: DataType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TableDef {
    pub name: String,
    pub columns: Vec<ColumnDef>,
    pub primary_key: Vec<String>,
    #[serde(skip)]
    pk_indices: Vec<usize>,
}

impl TableDef {
    /// Builds a definition; an empty key list makes every column part of the key.
    pub fn new(name: &str, columns: Vec<ColumnDef>, primary_key: Vec<String>) -> Result<TableDef, StorageError> {
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(StorageError::DuplicateColumn { table: name.to_string(), column: c.name.clone() });
            }
        }
        if columns.is_empty() {
            return Err(StorageError::EmptyTable(name.to_string()));
        }
        let primary_key = if primary_key.is_empty() {
            columns.iter().map(|c| c.name.clone()).collect()
        } else {
            primary_key
        };
        let pk_indices = primary_key
            .iter()
            .map(|k| {
                columns.iter().position(|c| &c.name == k).ok_or_else(|| StorageError::UnknownColumn {
                    table: name.to_string(),
                    column: k.clone(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TableDef { name: name.to_string(), columns, primary_key, pk_indices })
    }

    pub fn from_ast(ct: &CreateTable) -> Result<TableDef, StorageError> {
        let columns = ct
            .columns
            .iter()
            .map(|(n, t)| {
                DataType::parse(t)
                    .map(|ty| ColumnDef { name: n.clone(), ty })
                    .ok_or_else(|| StorageError::BadType { column: n.clone(), ty: t.clone() })
            })
            .collect::<Result<Vec<_>, _>>()?;
        TableDef::new(&ct.name, columns, ct.primary_key.clone())
    }

    pub fn arity(&self) -> usize {
        self.columns.len()
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn pk_indices(&self) -> &[usize] {
        &self.pk_indices
    }

    pub fn is_pk_column(&self, idx: usize) -> bool {
        self.pk_indices.contains(&idx)
    }

    /// Primary-key values of a row, in key order.
    pub fn pk_of(&self, row: &[Value]) -> Vec<Value> {
        self.pk_indices.iter().map(|&i| row[i].clone()).collect()
    }

    /// DDL text that recreates this table.
    pub fn to_ddl(&self) -> String {
        let cols: Vec<String> = self.columns.iter().map(|c| format!("{} {}", c.name, c.ty)).collect();
        format!("CREATE TABLE {} ({}, PRIMARY KEY ({}))", self.name, cols.join(", "), self.primary_key.join(", "))
    }
}

/// Table definitions by name, iterated in name order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Catalog {
    tables: BTreeMap<String, TableDef>,
}

impl Catalog {
    pub fn new() -> Catalog {
        Catalog::default()
    }

    pub fn add(&mut self, def: TableDef) -> Result<&TableDef, StorageError> {
        if self.tables.contains_key(&def.name) {
            return Err(StorageError::DuplicateTable(def.name));
        }
        let name = def.name.clone();
        Ok(self.tables.entry(name).or_insert(def))
    }

    pub fn get(&self, name: &str) -> Option<&TableDef> {
        self.tables.get(name)
    }

    pub fn table(&self, name: &str) -> Result<&TableDef, StorageError> {
        self.get(name).ok_or_else(|| StorageError::UnknownTable(name.to_string()))
    }

    pub fn tables(&self) -> impl Iterator<Item = &TableDef> {
        self.tables.values()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tables.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }
}

impl From<ParseError> for StorageError {
    fn from(e: ParseError) -> Self {
        StorageError::Ddl(e)
    }
}
