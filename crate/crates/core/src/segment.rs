//! Binary format of immutable master segments.
//!
//! ```text
//! [magic "DTBL"][u16 version][u32 table_id][u32 file_id][u64 row_count][u64 schema_digest]
//! [row]*
//! [u32 crc32 of everything above]
//! ```
//!
//! A row is a null bitmap of `ceil(columns / 8)` bytes (bit `i % 8` of byte
//! `i / 8` set means column `i` is null) followed, for every non-null cell,
//! by a `u32` payload length and the payload. All integers are big-endian.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::record_id::RecordId;
use crate::value::{Row, Schema, Value};

pub const MAGIC: [u8; 4] = *b"DTBL";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 30;
pub const TRAILER_LEN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentHeader {
    pub table_id: u32,
    pub file_id: u32,
    pub row_count: u64,
    pub schema_digest: u64,
}

impl SegmentHeader {
    pub fn encode(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..4].copy_from_slice(&MAGIC);
        out[4..6].copy_from_slice(&FORMAT_VERSION.to_be_bytes());
        out[6..10].copy_from_slice(&self.table_id.to_be_bytes());
        out[10..14].copy_from_slice(&self.file_id.to_be_bytes());
        out[14..22].copy_from_slice(&self.row_count.to_be_bytes());
        out[22..30].copy_from_slice(&self.schema_digest.to_be_bytes());
        out
    }

    /// Parses and validates magic and version. Does not check the CRC.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(CoreError::Corrupt(format!(
                "segment header truncated at {} bytes",
                bytes.len()
            )));
        }
        if bytes[0..4] != MAGIC {
            return Err(CoreError::Corrupt("bad segment magic".into()));
        }
        let version = u16::from_be_bytes([bytes[4], bytes[5]]);
        if version != FORMAT_VERSION {
            return Err(CoreError::Corrupt(format!(
                "unsupported segment version {version}"
            )));
        }
        Ok(SegmentHeader {
            table_id: u32::from_be_bytes(bytes[6..10].try_into().unwrap()),
            file_id: u32::from_be_bytes(bytes[10..14].try_into().unwrap()),
            row_count: u64::from_be_bytes(bytes[14..22].try_into().unwrap()),
            schema_digest: u64::from_be_bytes(bytes[22..30].try_into().unwrap()),
        })
    }
}

fn bitmap_len(columns: usize) -> usize {
    columns.div_ceil(8)
}

/// Size of one row in the segment body.
pub fn encoded_row_len(row: &Row) -> usize {
    bitmap_len(row.len())
        + row
            .iter()
            .filter(|v| !v.is_null())
            .map(|v| 4 + v.payload_len())
            .sum::<usize>()
}

pub fn encode_row(row: &Row, out: &mut Vec<u8>) {
    let start = out.len();
    out.resize(start + bitmap_len(row.len()), 0);
    for (i, v) in row.iter().enumerate() {
        if v.is_null() {
            out[start + i / 8] |= 1 << (i % 8);
        }
    }
    for v in row.iter().filter(|v| !v.is_null()) {
        out.extend_from_slice(&(v.payload_len() as u32).to_be_bytes());
        v.encode_payload(out);
    }
}

/// Accumulates the body of one segment. Callers cut a new segment once
/// [`SegmentEncoder::len`] passes their size target.
#[derive(Debug)]
pub struct SegmentEncoder {
    table_id: u32,
    file_id: u32,
    schema_digest: u64,
    rows: u64,
    body: Vec<u8>,
}

impl SegmentEncoder {
    pub fn new(table_id: u32, file_id: u32, schema: &Schema) -> Self {
        SegmentEncoder {
            table_id,
            file_id,
            schema_digest: schema.digest(),
            rows: 0,
            body: Vec::new(),
        }
    }

    /// Appends a row and returns its record id. Rows must already conform to
    /// the schema.
    pub fn push(&mut self, row: &Row) -> Result<RecordId> {
        let id = RecordId::try_new(u64::from(self.file_id), self.rows)?;
        encode_row(row, &mut self.body);
        self.rows += 1;
        Ok(id)
    }

    pub fn row_count(&self) -> u64 {
        self.rows
    }

    pub fn file_id(&self) -> u32 {
        self.file_id
    }

    /// Encoded size the finished segment will have.
    pub fn len(&self) -> usize {
        HEADER_LEN + self.body.len() + TRAILER_LEN
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn header(&self) -> SegmentHeader {
        SegmentHeader {
            table_id: self.table_id,
            file_id: self.file_id,
            row_count: self.rows,
            schema_digest: self.schema_digest,
        }
    }

    pub fn finish(self) -> Vec<u8> {
        let header = self.header().encode();
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&header);
        out.extend_from_slice(&self.body);
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_be_bytes());
        out
    }
}

/// Encodes a whole segment in one call.
pub fn encode_segment<'a>(
    table_id: u32,
    file_id: u32,
    schema: &Schema,
    rows: impl IntoIterator<Item = &'a Row>,
) -> Result<Vec<u8>> {
    let mut enc = SegmentEncoder::new(table_id, file_id, schema);
    for row in rows {
        enc.push(row)?;
    }
    Ok(enc.finish())
}

/// Validating reader over a complete segment image.
///
/// [`SegmentReader::open`] checks length, magic, version, CRC and the schema
/// digest before any row is handed out, so a damaged file is reported as
/// [`CoreError::Corrupt`] instead of yielding partial data.
#[derive(Debug)]
pub struct SegmentReader<B> {
    buf: B,
    header: SegmentHeader,
    schema: Schema,
    pos: usize,
    next_row: u64,
    failed: bool,
}

impl<B: AsRef<[u8]>> SegmentReader<B> {
    pub fn open(buf: B, schema: &Schema) -> Result<Self> {
        let bytes = buf.as_ref();
        let header = SegmentHeader::decode(bytes)?;
        if bytes.len() < HEADER_LEN + TRAILER_LEN {
            return Err(CoreError::Corrupt("segment truncated before trailer".into()));
        }
        let body_end = bytes.len() - TRAILER_LEN;
        let stored = u32::from_be_bytes(bytes[body_end..].try_into().unwrap());
        if crc32fast::hash(&bytes[..body_end]) != stored {
            return Err(CoreError::Corrupt("segment checksum mismatch".into()));
        }
        if header.schema_digest != schema.digest() {
            return Err(CoreError::Corrupt(
                "segment schema digest does not match table schema".into(),
            ));
        }
        if header.row_count > u64::from(u32::MAX) + 1 {
            return Err(CoreError::Corrupt("segment row count too large".into()));
        }
        Ok(SegmentReader {
            buf,
            header,
            schema: schema.clone(),
            pos: HEADER_LEN,
            next_row: 0,
            failed: false,
        })
    }

    pub fn header(&self) -> &SegmentHeader {
        &self.header
    }

    fn body_end(&self) -> usize {
        self.buf.as_ref().len() - TRAILER_LEN
    }

    fn decode_row(&mut self) -> Result<Row> {
        let end = self.body_end();
        let bytes = &self.buf.as_ref()[..end];
        let ncols = self.schema.len();
        let bm = bitmap_len(ncols);
        let truncated = || CoreError::Corrupt("segment row truncated".into());
        let bitmap = bytes.get(self.pos..self.pos + bm).ok_or_else(truncated)?;
        let mut pos = self.pos + bm;
        let mut values = Vec::with_capacity(ncols);
        for (i, col) in self.schema.columns().iter().enumerate() {
            if bitmap[i / 8] & (1 << (i % 8)) != 0 {
                values.push(Value::Null);
                continue;
            }
            let len_bytes = bytes.get(pos..pos + 4).ok_or_else(truncated)?;
            let len = u32::from_be_bytes(len_bytes.try_into().unwrap()) as usize;
            pos += 4;
            let payload = bytes
                .get(pos..pos.checked_add(len).ok_or_else(truncated)?)
                .ok_or_else(truncated)?;
            values.push(Value::decode_payload(col.ty, payload)?);
            pos += len;
        }
        self.pos = pos;
        Ok(Row(values))
    }
}

impl<B: AsRef<[u8]>> Iterator for SegmentReader<B> {
    type Item = Result<(RecordId, Row)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        if self.next_row == self.header.row_count {
            if self.pos != self.body_end() {
                self.failed = true;
                return Some(Err(CoreError::Corrupt(
                    "trailing bytes after last segment row".into(),
                )));
            }
            return None;
        }
        let id = RecordId::new(self.header.file_id, self.next_row as u32);
        match self.decode_row() {
            Ok(row) => {
                self.next_row += 1;
                Some(Ok((id, row)))
            }
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}
