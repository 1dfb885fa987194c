//! Storage-independent core of the dualtable engine.
//!
//! A dualtable keeps its base rows in immutable *master* segments and every
//! later modification in an *attached* delta store keyed by [`RecordId`].
//! This crate holds everything that does not touch the file system:
//!
//! - [`record_id`]: the packed `(file_id, row_number)` identity
//! - [`value`]: column types, scalar values, rows and schemas
//! - [`segment`]: the binary master segment format
//! - [`delta`] and [`journal`]: delta entries, their supersession rules and
//!   the framed journal records that make them durable
//! - [`merge`]: the two-pointer merge that produces the up-to-date view
//! - [`expr`] and [`dml`]: predicates, assignments and the statement parser
//! - [`cost`]: the EDIT/OVERWRITE plan cost model
//! - [`ratio`]: modification-ratio estimation from execution history
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cost;
pub mod delta;
pub mod dml;
pub mod error;
pub mod expr;
pub mod journal;
pub mod merge;
pub mod ratio;
pub mod record_id;
pub mod segment;
pub mod value;

pub use cost::{CostParams, ModOp, Plan, PlanDecision, TableStats};
pub use delta::{DeltaEntry, DeltaKind, DeltaState};
pub use dml::{parse, ParseError, Statement};
pub use error::CoreError;
pub use record_id::RecordId;
pub use value::{Column, ColumnType, Row, Schema, Value};
