//! Column types, scalar values, rows and table schemas.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::hash::Hasher;
use core::ops::{Deref, DerefMut};

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Int64,
    Float64,
    Utf8,
    Bool,
}

impl ColumnType {
    pub fn name(self) -> &'static str {
        match self {
            ColumnType::Int64 => "int64",
            ColumnType::Float64 => "float64",
            ColumnType::Utf8 => "utf8",
            ColumnType::Bool => "bool",
        }
    }

    /// Accepts the canonical names plus the usual SQL spellings.
    pub fn from_name(name: &str) -> Option<Self> {
        let ty = match name.to_ascii_lowercase().as_str() {
            "int64" | "bigint" | "int" | "integer" => ColumnType::Int64,
            "float64" | "double" | "float" | "real" => ColumnType::Float64,
            "utf8" | "string" | "varchar" | "text" => ColumnType::Utf8,
            "bool" | "boolean" => ColumnType::Bool,
            _ => return None,
        };
        Some(ty)
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, ColumnType::Int64 | ColumnType::Float64)
    }

    /// Encoded payload width for fixed-width types.
    pub fn fixed_width(self) -> Option<usize> {
        match self {
            ColumnType::Int64 | ColumnType::Float64 => Some(8),
            ColumnType::Bool => Some(1),
            ColumnType::Utf8 => None,
        }
    }
}

impl fmt::Display for ColumnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Null,
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    /// `None` for `Null`, which conforms to every column type.
    pub fn column_type(&self) -> Option<ColumnType> {
        match self {
            Value::Null => None,
            Value::Int(_) => Some(ColumnType::Int64),
            Value::Float(_) => Some(ColumnType::Float64),
            Value::Str(_) => Some(ColumnType::Utf8),
            Value::Bool(_) => Some(ColumnType::Bool),
        }
    }

    pub fn type_name(&self) -> &'static str {
        self.column_type().map_or("null", ColumnType::name)
    }

    pub fn conforms_to(&self, ty: ColumnType) -> bool {
        self.column_type().is_none_or(|t| t == ty)
    }

    /// Converts to the column type, widening integers to floats. Any other
    /// mismatch is an error.
    pub fn coerce_to(self, column: &Column) -> Result<Value> {
        match (self, column.ty) {
            (Value::Int(i), ColumnType::Float64) => Ok(Value::Float(i as f64)),
            (v, ty) if v.conforms_to(ty) => Ok(v),
            (v, ty) => Err(CoreError::TypeMismatch {
                column: column.name.clone(),
                expected: ty,
                found: v.type_name(),
            }),
        }
    }

    /// Number of payload bytes in the binary encodings (0 for null).
    pub fn payload_len(&self) -> usize {
        match self {
            Value::Null => 0,
            Value::Int(_) | Value::Float(_) => 8,
            Value::Bool(_) => 1,
            Value::Str(s) => s.len(),
        }
    }

    pub fn encode_payload(&self, out: &mut Vec<u8>) {
        match self {
            Value::Null => {}
            Value::Int(i) => out.extend_from_slice(&i.to_be_bytes()),
            Value::Float(x) => out.extend_from_slice(&x.to_bits().to_be_bytes()),
            Value::Bool(b) => out.push(u8::from(*b)),
            Value::Str(s) => out.extend_from_slice(s.as_bytes()),
        }
    }

    pub fn decode_payload(ty: ColumnType, bytes: &[u8]) -> Result<Value> {
        let fixed = |bytes: &[u8]| -> Result<[u8; 8]> {
            bytes
                .try_into()
                .map_err(|_| CoreError::Corrupt(format!("{ty} cell has {} bytes", bytes.len())))
        };
        match ty {
            ColumnType::Int64 => Ok(Value::Int(i64::from_be_bytes(fixed(bytes)?))),
            ColumnType::Float64 => Ok(Value::Float(f64::from_bits(u64::from_be_bytes(fixed(
                bytes,
            )?)))),
            ColumnType::Bool => match bytes {
                [0] => Ok(Value::Bool(false)),
                [1] => Ok(Value::Bool(true)),
                _ => Err(CoreError::Corrupt("invalid bool cell".to_owned())),
            },
            ColumnType::Utf8 => core::str::from_utf8(bytes)
                .map(|s| Value::Str(s.to_owned()))
                .map_err(|_| CoreError::Corrupt("invalid utf-8 in string cell".to_owned())),
        }
    }

    /// Writes the value as a literal the statement parser reads back to an
    /// equal value.
    pub fn write_literal(&self, f: &mut impl fmt::Write) -> fmt::Result {
        match self {
            Value::Null => f.write_str("NULL"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Bool(true) => f.write_str("TRUE"),
            Value::Bool(false) => f.write_str("FALSE"),
            Value::Str(s) => {
                f.write_char('\'')?;
                for c in s.chars() {
                    if c == '\'' {
                        f.write_str("''")?;
                    } else {
                        f.write_char(c)?;
                    }
                }
                f.write_char('\'')
            }
        }
    }
}

/// Plain text rendering used for CSV output: nulls are empty, strings are raw.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => Ok(()),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ColumnType,
}

impl Column {
    pub fn new(name: impl Into<String>, ty: ColumnType) -> Self {
        Column {
            name: name.into(),
            ty,
        }
    }
}

/// Ordered, non-empty list of uniquely named columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Column>", into = "Vec<Column>")]
pub struct Schema {
    columns: Vec<Column>,
}

impl Schema {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        if columns.is_empty() {
            return Err(CoreError::InvalidSchema(
                "a table needs at least one column".to_owned(),
            ));
        }
        for (i, c) in columns.iter().enumerate() {
            if c.name.is_empty() {
                return Err(CoreError::InvalidSchema("empty column name".to_owned()));
            }
            if columns[..i].iter().any(|p| p.name == c.name) {
                return Err(CoreError::InvalidSchema(format!(
                    "duplicate column `{}`",
                    c.name
                )));
            }
        }
        if columns.len() > usize::from(u16::MAX) {
            return Err(CoreError::InvalidSchema("too many columns".to_owned()));
        }
        Ok(Schema { columns })
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn column(&self, ordinal: usize) -> Option<&Column> {
        self.columns.get(ordinal)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn resolve(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| CoreError::UnknownColumn(name.to_owned()))
    }

    /// 64-bit FNV-1a digest of the column names and types, stored in every
    /// segment header.
    pub fn digest(&self) -> u64 {
        let mut h = FnvHasher::default();
        for c in &self.columns {
            h.write(c.name.as_bytes());
            h.write(b":");
            h.write(c.ty.name().as_bytes());
            h.write(b";");
        }
        h.finish()
    }

    /// Checks arity and per-cell types.
    pub fn check_row(&self, row: &Row) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(CoreError::ArityMismatch {
                expected: self.columns.len(),
                found: row.len(),
            });
        }
        for (v, c) in row.iter().zip(&self.columns) {
            if !v.conforms_to(c.ty) {
                return Err(CoreError::TypeMismatch {
                    column: c.name.clone(),
                    expected: c.ty,
                    found: v.type_name(),
                });
            }
        }
        Ok(())
    }

    /// Checks arity and coerces each cell to its column type.
    pub fn coerce_row(&self, values: Vec<Value>) -> Result<Row> {
        if values.len() != self.columns.len() {
            return Err(CoreError::ArityMismatch {
                expected: self.columns.len(),
                found: values.len(),
            });
        }
        values
            .into_iter()
            .zip(&self.columns)
            .map(|(v, c)| v.coerce_to(c))
            .collect::<Result<Vec<_>>>()
            .map(Row)
    }
}

impl TryFrom<Vec<Column>> for Schema {
    type Error = CoreError;

    fn try_from(columns: Vec<Column>) -> Result<Self> {
        Schema::new(columns)
    }
}

impl From<Schema> for Vec<Column> {
    fn from(schema: Schema) -> Self {
        schema.columns
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Row(pub Vec<Value>);

impl Row {
    pub fn new(values: Vec<Value>) -> Self {
        Row(values)
    }

    pub fn into_values(self) -> Vec<Value> {
        self.0
    }

    /// Keeps only the given ordinals, in the given order.
    pub fn project(&self, ordinals: &[usize]) -> Row {
        Row(ordinals.iter().map(|&i| self.0[i].clone()).collect())
    }
}

impl Deref for Row {
    type Target = Vec<Value>;

    fn deref(&self) -> &Vec<Value> {
        &self.0
    }
}

impl DerefMut for Row {
    fn deref_mut(&mut self) -> &mut Vec<Value> {
        &mut self.0
    }
}

impl From<Vec<Value>> for Row {
    fn from(values: Vec<Value>) -> Self {
        Row(values)
    }
}
