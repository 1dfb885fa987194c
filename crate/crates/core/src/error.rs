use alloc::string::String;

use crate::record_id::RecordId;
use crate::value::ColumnType;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoreError {
    #[error("record id component out of range: file_id={file_id}, row_number={row_number}")]
    RecordIdOverflow { file_id: u64, row_number: u64 },

    #[error("corrupt data: {0}")]
    Corrupt(String),

    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("column ordinal {0} out of range")]
    InvalidOrdinal(u16),

    #[error("row has {found} values, schema has {expected} columns")]
    ArityMismatch { expected: usize, found: usize },

    #[error("type mismatch for column `{column}`: expected {expected}, found {found}")]
    TypeMismatch {
        column: String,
        expected: ColumnType,
        found: &'static str,
    },

    #[error("type error: {0}")]
    Type(String),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("patch must modify at least one column")]
    EmptyPatch,

    #[error("cannot patch deleted record {0}")]
    PatchOnDeleted(RecordId),

    #[error("invalid cost parameters: {0}")]
    InvalidCostParams(&'static str),

    #[error("ratio {0} outside [0, 1]")]
    InvalidRatio(f64),
}

pub type Result<T, E = CoreError> = core::result::Result<T, E>;
