//! SQL subset front end: lexer, recursive-descent parser and AST printer.
//!
//! The parser builds every nested SELECT before the node that contains it, so
//! derived tables and scalar subqueries are complete by the time the parent is
//! assembled.

pub mod ast;
mod lexer;
mod parser;
pub mod render;

pub use ast::*;
pub use lexer::split_statements;
pub use parser::{parse, parse_create_table};
pub use render::render;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at offset {position}: expected {}, found {found}", expected_list(expected))]
    Syntax { position: usize, expected: Vec<String>, found: String },
    #[error("unsupported feature {feature} at offset {position}")]
    Unsupported { feature: String, position: usize },
    #[error("only one statement per call (second statement at offset {position})")]
    MultipleStatements { position: usize },
    #[error("alias {alias} used twice in one FROM list (offset {position})")]
    DuplicateAlias { alias: String, position: usize },
}

impl ParseError {
    pub(crate) fn syntax(position: usize, expected: Vec<String>, found: String) -> ParseError {
        ParseError::Syntax { position, expected, found }
    }

    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { position, .. }
            | ParseError::Unsupported { position, .. }
            | ParseError::MultipleStatements { position }
            | ParseError::DuplicateAlias { position, .. } => *position,
        }
    }

    pub fn is_unsupported(&self) -> bool {
        matches!(self, ParseError::Unsupported { .. })
    }
}

fn expected_list(items: &[String]) -> String {
    if items.is_empty() {
        "valid token".to_string()
    } else {
        items.join(" or ")
    }
}

/// Parses a DDL script: a `;`-separated sequence of `CREATE TABLE` statements.
pub fn parse_ddl_script(script: &str) -> Result<Vec<CreateTable>, ParseError> {
    split_statements(script).into_iter().map(|(_, stmt)| parse_create_table(&stmt)).collect()
}

#[cfg(test)]
mod tests;
