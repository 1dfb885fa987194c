//! Statement language of the engine.
//!
//! ```text
//! stmt    := create | drop | load | insert | select | update | delete | compact
//! create  := CREATE TABLE id '(' id type (',' id type)* ')'
//! drop    := DROP TABLE id
//! load    := LOAD id FROM string
//! insert  := INSERT INTO id VALUES tuple (',' tuple)*
//! select  := SELECT ('*' | id (',' id)*) FROM id [WHERE pred]
//! update  := UPDATE id SET id '=' expr (',' id '=' expr)* [WHERE pred] [WITH opts]
//! delete  := DELETE FROM id [WHERE pred] [WITH opts]
//! compact := COMPACT id
//! opts    := opt (',' opt)*
//! opt     := RATIO '=' number | K '=' integer | PLAN '=' (EDIT | OVERWRITE)
//! pred    := conj (OR conj)*
//! conj    := cmp (AND cmp)*
//! cmp     := expr ('=' | '!=' | '<>' | '<' | '<=' | '>' | '>=') expr
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | id | literal | '(' expr ')'
//! ```
//!
//! Keywords and identifiers are case-insensitive; identifiers are kept in
//! lower case. `RATIO`, `K`, `PLAN`, `EDIT`, `OVERWRITE` and type names are
//! only special where the grammar expects them. `--` starts a line comment.
//!
//! Every [`Statement`] prints (via `Display`) as canonical text that parses
//! back to an equal statement.

mod lexer;
mod parser;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use lexer::{Keyword, Lexer, Span, Token, TokenKind};
pub use parser::{parse, parse_script, ScriptParser};

use crate::cost::Plan;
use crate::expr::{Assignment, Predicate};
use crate::value::{Column, Value};

/// Positioned syntax error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
    /// Tokens that would have been accepted at the error position.
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)?;
        if !self.expected.is_empty() {
            write!(f, "; expected ")?;
            for (i, e) in self.expected.iter().enumerate() {
                if i > 0 {
                    f.write_str(if i + 1 == self.expected.len() { " or " } else { ", " })?;
                }
                f.write_str(e)?;
            }
        }
        Ok(())
    }
}

impl core::error::Error for ParseError {}

/// Per-statement hints carried by `WITH`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DmlOptions {
    /// Expected fraction of the table the statement modifies.
    pub ratio: Option<f64>,
    /// Number of full reads expected after the statement.
    pub k: Option<u32>,
    /// Forces a plan instead of consulting the cost model.
    pub plan: Option<Plan>,
}

impl DmlOptions {
    pub fn is_empty(&self) -> bool {
        self.ratio.is_none() && self.k.is_none() && self.plan.is_none()
    }
}

impl fmt::Display for DmlOptions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut sep = "";
        if let Some(r) = self.ratio {
            write!(f, "RATIO = ")?;
            Value::Float(r).write_literal(f)?;
            sep = ", ";
        }
        if let Some(k) = self.k {
            write!(f, "{sep}K = {k}")?;
            sep = ", ";
        }
        if let Some(p) = self.plan {
            write!(f, "{sep}PLAN = {p}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatementKind {
    Select,
    Update,
    Delete,
    Insert,
    Load,
    Create,
    Drop,
    Compact,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    Create {
        table: String,
        columns: Vec<Column>,
    },
    Drop {
        table: String,
    },
    Load {
        table: String,
        path: String,
    },
    Insert {
        table: String,
        rows: Vec<Vec<Value>>,
    },
    Select {
        table: String,
        /// `None` selects every column.
        columns: Option<Vec<String>>,
        predicate: Option<Predicate>,
    },
    Update {
        table: String,
        assignments: Vec<Assignment>,
        predicate: Option<Predicate>,
        options: DmlOptions,
    },
    Delete {
        table: String,
        predicate: Option<Predicate>,
        options: DmlOptions,
    },
    Compact {
        table: String,
    },
}

impl Statement {
    pub fn kind(&self) -> StatementKind {
        match self {
            Statement::Create { .. } => StatementKind::Create,
            Statement::Drop { .. } => StatementKind::Drop,
            Statement::Load { .. } => StatementKind::Load,
            Statement::Insert { .. } => StatementKind::Insert,
            Statement::Select { .. } => StatementKind::Select,
            Statement::Update { .. } => StatementKind::Update,
            Statement::Delete { .. } => StatementKind::Delete,
            Statement::Compact { .. } => StatementKind::Compact,
        }
    }

    pub fn table(&self) -> &str {
        match self {
            Statement::Create { table, .. }
            | Statement::Drop { table }
            | Statement::Load { table, .. }
            | Statement::Insert { table, .. }
            | Statement::Select { table, .. }
            | Statement::Update { table, .. }
            | Statement::Delete { table, .. }
            | Statement::Compact { table } => table,
        }
    }
}

fn write_tuple(f: &mut fmt::Formatter<'_>, values: &[Value]) -> fmt::Result {
    f.write_str("(")?;
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        v.write_literal(f)?;
    }
    f.write_str(")")
}

fn write_tail(
    f: &mut fmt::Formatter<'_>,
    predicate: &Option<Predicate>,
    options: Option<&DmlOptions>,
) -> fmt::Result {
    if let Some(p) = predicate {
        write!(f, " WHERE {p}")?;
    }
    if let Some(o) = options.filter(|o| !o.is_empty()) {
        write!(f, " WITH {o}")?;
    }
    Ok(())
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::Create { table, columns } => {
                write!(f, "CREATE TABLE {table} (")?;
                for (i, c) in columns.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{} {}", c.name, c.ty.name().to_ascii_uppercase())?;
                }
                f.write_str(")")
            }
            Statement::Drop { table } => write!(f, "DROP TABLE {table}"),
            Statement::Load { table, path } => {
                write!(f, "LOAD {table} FROM ")?;
                Value::Str(path.clone()).write_literal(f)
            }
            Statement::Insert { table, rows } => {
                write!(f, "INSERT INTO {table} VALUES ")?;
                for (i, r) in rows.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write_tuple(f, r)?;
                }
                Ok(())
            }
            Statement::Select {
                table,
                columns,
                predicate,
            } => {
                f.write_str("SELECT ")?;
                match columns {
                    None => f.write_str("*")?,
                    Some(cols) => f.write_str(&cols.join(", "))?,
                }
                write!(f, " FROM {table}")?;
                write_tail(f, predicate, None)
            }
            Statement::Update {
                table,
                assignments,
                predicate,
                options,
            } => {
                write!(f, "UPDATE {table} SET ")?;
                for (i, a) in assignments.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write_tail(f, predicate, Some(options))
            }
            Statement::Delete {
                table,
                predicate,
                options,
            } => {
                write!(f, "DELETE FROM {table}")?;
                write_tail(f, predicate, Some(options))
            }
            Statement::Compact { table } => write!(f, "COMPACT {table}"),
        }
    }
}
