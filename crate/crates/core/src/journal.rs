//! Framed records of the attached-store journal and their replay.
//!
//! ```text
//! [u32 len][u64 record_id][u8 kind][payload][u32 crc32]
//! ```
//!
//! `len` counts the id, kind and payload bytes; the CRC covers `len` and
//! those bytes. A patch payload is `u16` cell count followed by
//! `(u16 ordinal, u32 len, bytes)` per cell, with length `0xFFFF_FFFF`
//! standing for null. Delete markers carry no payload.
//!
//! A journal starts with an epoch record naming the master segment
//! generation the deltas refer to. Data records are grouped between a begin
//! and a commit record carrying the same statement sequence number; replay
//! applies a group only once its commit has been read, so a statement that
//! was cut short by a crash leaves no trace.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::delta::{DeltaOp, DeltaState};
use crate::error::{CoreError, Result};
use crate::record_id::RecordId;
use crate::value::{Schema, Value};

const KIND_PATCH: u8 = 0;
const KIND_DELETE: u8 = 1;
const KIND_BEGIN: u8 = 2;
const KIND_COMMIT: u8 = 3;
const KIND_EPOCH: u8 = 4;

const NULL_LEN: u32 = u32::MAX;

/// Frame overhead around the id/kind/payload body.
pub const FRAME_OVERHEAD: usize = 4 + 4;

#[derive(Debug, Clone, PartialEq)]
pub enum JournalRecord {
    Op(DeltaOp),
    Begin { seq: u64 },
    Commit { seq: u64 },
    Epoch { epoch: u64 },
}

impl JournalRecord {
    pub fn encode(&self, out: &mut Vec<u8>) {
        let start = out.len();
        out.extend_from_slice(&[0; 4]);
        let (key, kind) = match self {
            JournalRecord::Op(DeltaOp::Patch { record_id, .. }) => (record_id.packed(), KIND_PATCH),
            JournalRecord::Op(DeltaOp::Delete { record_id }) => (record_id.packed(), KIND_DELETE),
            JournalRecord::Begin { seq } => (*seq, KIND_BEGIN),
            JournalRecord::Commit { seq } => (*seq, KIND_COMMIT),
            JournalRecord::Epoch { epoch } => (*epoch, KIND_EPOCH),
        };
        out.extend_from_slice(&key.to_be_bytes());
        out.push(kind);
        if let JournalRecord::Op(DeltaOp::Patch { cells, .. }) = self {
            out.extend_from_slice(&(cells.len() as u16).to_be_bytes());
            for (ordinal, value) in cells {
                out.extend_from_slice(&ordinal.to_be_bytes());
                if value.is_null() {
                    out.extend_from_slice(&NULL_LEN.to_be_bytes());
                } else {
                    out.extend_from_slice(&(value.payload_len() as u32).to_be_bytes());
                    value.encode_payload(out);
                }
            }
        }
        let body_len = (out.len() - start - 4) as u32;
        out[start..start + 4].copy_from_slice(&body_len.to_be_bytes());
        let crc = crc32fast::hash(&out[start..]);
        out.extend_from_slice(&crc.to_be_bytes());
    }

    pub fn encoded_len(&self) -> usize {
        let payload = match self {
            JournalRecord::Op(DeltaOp::Patch { cells, .. }) => {
                2 + cells.values().map(|v| 6 + v.payload_len()).sum::<usize>()
            }
            _ => 0,
        };
        FRAME_OVERHEAD + 9 + payload
    }
}

#[derive(Debug, PartialEq)]
pub enum Decoded {
    Record { record: JournalRecord, len: usize },
    /// The buffer ends inside a frame.
    Incomplete,
}

/// Decodes the frame at the start of `buf`.
pub fn decode_record(buf: &[u8], schema: &Schema) -> Result<Decoded> {
    let Some(len_bytes) = buf.get(..4) else {
        return Ok(Decoded::Incomplete);
    };
    let body_len = u32::from_be_bytes(len_bytes.try_into().unwrap()) as usize;
    if body_len < 9 {
        return Err(CoreError::Corrupt(format!("journal frame length {body_len}")));
    }
    let total = 4 + body_len + 4;
    let Some(frame) = buf.get(..total) else {
        return Ok(Decoded::Incomplete);
    };
    let stored = u32::from_be_bytes(frame[total - 4..].try_into().unwrap());
    if crc32fast::hash(&frame[..total - 4]) != stored {
        return Err(CoreError::Corrupt("journal frame checksum mismatch".into()));
    }
    let body = &frame[4..total - 4];
    let key = u64::from_be_bytes(body[..8].try_into().unwrap());
    let payload = &body[9..];
    let no_payload = |r: JournalRecord| {
        if payload.is_empty() {
            Ok(r)
        } else {
            Err(CoreError::Corrupt("unexpected journal payload".into()))
        }
    };
    let record = match body[8] {
        KIND_PATCH => JournalRecord::Op(DeltaOp::Patch {
            record_id: RecordId::from_packed(key),
            cells: decode_cells(payload, schema)?,
        }),
        KIND_DELETE => no_payload(JournalRecord::Op(DeltaOp::Delete {
            record_id: RecordId::from_packed(key),
        }))?,
        KIND_BEGIN => no_payload(JournalRecord::Begin { seq: key })?,
        KIND_COMMIT => no_payload(JournalRecord::Commit { seq: key })?,
        KIND_EPOCH => no_payload(JournalRecord::Epoch { epoch: key })?,
        k => return Err(CoreError::Corrupt(format!("unknown journal record kind {k}"))),
    };
    Ok(Decoded::Record { record, len: total })
}

fn decode_cells(payload: &[u8], schema: &Schema) -> Result<BTreeMap<u16, Value>> {
    let bad = || CoreError::Corrupt("malformed patch payload".into());
    let count = u16::from_be_bytes(payload.get(..2).ok_or_else(bad)?.try_into().unwrap());
    let mut pos = 2;
    let mut cells = BTreeMap::new();
    for _ in 0..count {
        let head = payload.get(pos..pos + 6).ok_or_else(bad)?;
        let ordinal = u16::from_be_bytes([head[0], head[1]]);
        let len = u32::from_be_bytes(head[2..6].try_into().unwrap());
        pos += 6;
        let column = schema
            .column(usize::from(ordinal))
            .ok_or(CoreError::InvalidOrdinal(ordinal))?;
        let value = if len == NULL_LEN {
            Value::Null
        } else {
            let end = pos.checked_add(len as usize).ok_or_else(bad)?;
            let bytes = payload.get(pos..end).ok_or_else(bad)?;
            pos = end;
            Value::decode_payload(column.ty, bytes)?
        };
        if cells.insert(ordinal, value).is_some() {
            return Err(bad());
        }
    }
    if pos != payload.len() {
        return Err(bad());
    }
    Ok(cells)
}

/// Encodes a statement group: begin, the operations, commit.
pub fn encode_group(seq: u64, ops: &[DeltaOp], out: &mut Vec<u8>) {
    JournalRecord::Begin { seq }.encode(out);
    for op in ops {
        JournalRecord::Op(op.clone()).encode(out);
    }
    JournalRecord::Commit { seq }.encode(out);
}

/// Result of replaying a journal image.
#[derive(Debug, Default)]
pub struct Replay {
    pub state: DeltaState,
    /// Epoch from the leading record, if it survived.
    pub epoch: Option<u64>,
    /// Length of the prefix made of whole, committed groups. Anything past
    /// it is a torn or uncommitted tail.
    pub valid_len: usize,
    /// Highest committed statement sequence number.
    pub last_seq: Option<u64>,
    /// Whether bytes past `valid_len` were ignored.
    pub truncated: bool,
}

/// Rebuilds the visible delta state from a journal image. Decoding stops at
/// the first torn, corrupt or out-of-place record; everything before the
/// last complete commit is kept.
pub fn replay(buf: &[u8], schema: &Schema) -> Replay {
    let mut out = Replay::default();
    let mut pos = 0;
    let mut pending: Option<(u64, Vec<DeltaOp>)> = None;

    while pos < buf.len() {
        let (record, len) = match decode_record(&buf[pos..], schema) {
            Ok(Decoded::Record { record, len }) => (record, len),
            Ok(Decoded::Incomplete) | Err(_) => break,
        };
        match (record, &mut pending) {
            (JournalRecord::Epoch { epoch }, None) if pos == 0 => {
                out.epoch = Some(epoch);
                out.valid_len = len;
            }
            (JournalRecord::Begin { seq }, None) if out.epoch.is_some() => {
                pending = Some((seq, Vec::new()));
            }
            (JournalRecord::Op(op), Some((_, ops))) => ops.push(op),
            (JournalRecord::Commit { seq }, Some((open, ops))) if seq == *open => {
                if out.state.apply_batch(ops, schema).is_err() {
                    break;
                }
                out.last_seq = Some(seq);
                pending = None;
                out.valid_len = pos + len;
            }
            _ => break,
        }
        pos += len;
    }
    out.truncated = out.valid_len < buf.len();
    out
}
