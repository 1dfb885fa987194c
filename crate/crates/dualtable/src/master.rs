//! Master store: immutable segment files `t<table>_f<file>.dtb`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use dualtable_core::segment::{SegmentEncoder, SegmentReader};
use dualtable_core::{CoreError, RecordId, Row, Schema};

use crate::catalog::SegmentMeta;
use crate::counters::IoCounters;
use crate::error::{Error, Result};
use crate::fault::{self, Fs};

pub fn segment_file_name(table_id: u32, file_id: u32) -> String {
    format!("t{table_id}_f{file_id}.dtb")
}

/// A written segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentHandle {
    pub table_id: u32,
    pub file_id: u32,
    pub row_count: u64,
    pub bytes: u64,
    pub path: PathBuf,
}

impl SegmentHandle {
    pub fn from_meta(dir: &Path, table_id: u32, meta: &SegmentMeta) -> Self {
        SegmentHandle {
            table_id,
            file_id: meta.file_id,
            row_count: meta.row_count,
            bytes: meta.bytes,
            path: dir.join(segment_file_name(table_id, meta.file_id)),
        }
    }

    pub fn meta(&self) -> SegmentMeta {
        SegmentMeta {
            file_id: self.file_id,
            row_count: self.row_count,
            bytes: self.bytes,
        }
    }

    /// Record ids this segment can hold: `[file_id << 32, (file_id + 1) << 32)`.
    pub fn id_range(&self) -> (RecordId, Option<RecordId>) {
        RecordId::file_range(self.file_id)
    }
}

/// Row stream of one segment or a whole table.
pub type RowStream<'a> = Box<dyn Iterator<Item = Result<(RecordId, Row)>> + Send + 'a>;

#[derive(Debug, Clone)]
pub struct MasterStore {
    dir: PathBuf,
    fs: Fs,
    counters: Arc<IoCounters>,
}

impl MasterStore {
    pub fn new(dir: impl Into<PathBuf>, fs: Fs, counters: Arc<IoCounters>) -> Self {
        MasterStore {
            dir: dir.into(),
            fs,
            counters,
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes one segment holding `rows`. The file id must come from the
    /// catalog allocator.
    pub fn write_segment<'r>(
        &self,
        table_id: u32,
        file_id: u32,
        schema: &Schema,
        rows: impl IntoIterator<Item = &'r Row>,
    ) -> Result<SegmentHandle> {
        let mut enc = SegmentEncoder::new(table_id, file_id, schema);
        for row in rows {
            schema.check_row(row)?;
            enc.push(row)?;
        }
        self.write_encoded(table_id, enc)
    }

    fn write_encoded(&self, table_id: u32, enc: SegmentEncoder) -> Result<SegmentHandle> {
        let file_id = enc.file_id();
        let row_count = enc.row_count();
        let bytes = enc.finish();
        let path = self.dir.join(segment_file_name(table_id, file_id));
        if let Err(e) = self.fs.write_file(&path, &bytes) {
            let _ = self.fs.remove_file(&path);
            return Err(e);
        }
        self.counters.add_master_written(bytes.len() as u64);
        Ok(SegmentHandle {
            table_id,
            file_id,
            row_count,
            bytes: bytes.len() as u64,
            path,
        })
    }

    /// Reads and validates a whole segment image.
    pub fn open_segment(&self, handle: &SegmentHandle, schema: &Schema) -> Result<SegmentReader<Vec<u8>>> {
        let bytes = fault::read(&handle.path)?;
        self.counters.add_master_read(bytes.len() as u64);
        let reader = SegmentReader::open(bytes, schema)?;
        let h = reader.header();
        if h.table_id != handle.table_id || h.file_id != handle.file_id {
            return Err(CoreError::Corrupt(format!(
                "{} holds table {} file {}",
                handle.path.display(),
                h.table_id,
                h.file_id
            ))
            .into());
        }
        if h.row_count != handle.row_count {
            return Err(CoreError::Corrupt(format!(
                "{} has {} rows, catalog says {}",
                handle.path.display(),
                h.row_count,
                handle.row_count
            ))
            .into());
        }
        Ok(reader)
    }

    /// Rows of one segment in physical order, optionally projected.
    pub fn scan_segment<'a>(
        &self,
        handle: &SegmentHandle,
        schema: &Schema,
        projection: Option<&'a [usize]>,
    ) -> Result<RowStream<'a>> {
        let reader = self.open_segment(handle, schema)?;
        Ok(Box::new(reader.map(move |item| {
            let (id, row) = item?;
            Ok((id, match projection {
                Some(p) => row.project(p),
                None => row,
            }))
        })))
    }

    /// Rows of all `segments` (ascending file id), opened one at a time.
    pub fn scan_table<'a>(
        &'a self,
        segments: &'a [SegmentHandle],
        schema: &'a Schema,
        projection: Option<&'a [usize]>,
    ) -> RowStream<'a> {
        Box::new(
            segments
                .iter()
                .map(move |s| self.scan_segment(s, schema, projection))
                .flat_map(|r| match r {
                    Ok(stream) => stream,
                    Err(e) => Box::new(std::iter::once(Err(e))) as RowStream<'a>,
                }),
        )
    }

    pub fn remove_segment(&self, handle: &SegmentHandle) -> Result<()> {
        self.fs.remove_file(&handle.path)
    }
}

/// Writes a row stream as a run of segments, starting a new one whenever
/// the current one reaches the size target. No segment is created for an
/// empty stream.
pub struct SegmentSetWriter<'s> {
    store: &'s MasterStore,
    table_id: u32,
    schema: Schema,
    target: u64,
    current: Option<SegmentEncoder>,
    done: Vec<SegmentHandle>,
}

impl<'s> SegmentSetWriter<'s> {
    pub fn new(store: &'s MasterStore, table_id: u32, schema: Schema, target: u64) -> Self {
        SegmentSetWriter {
            store,
            table_id,
            schema,
            target,
            current: None,
            done: Vec::new(),
        }
    }

    /// Appends a conforming row. `alloc` is called for the file id of each
    /// new segment.
    pub fn push(&mut self, row: &Row, alloc: &mut dyn FnMut() -> Result<u32>) -> Result<()> {
        if self.current.is_none() {
            let file_id = alloc()?;
            self.current = Some(SegmentEncoder::new(self.table_id, file_id, &self.schema));
        }
        let enc = self.current.as_mut().unwrap();
        enc.push(row)?;
        if enc.len() as u64 >= self.target || enc.row_count() > u64::from(u32::MAX) {
            self.flush()?;
        }
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        if let Some(enc) = self.current.take() {
            self.done.push(self.store.write_encoded(self.table_id, enc)?);
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<Vec<SegmentHandle>> {
        self.flush()?;
        Ok(std::mem::take(&mut self.done))
    }

    /// Segments completed so far, for cleanup after a failure.
    pub fn written(&self) -> &[SegmentHandle] {
        &self.done
    }
}

/// Fails with a corruption error naming `path`.
pub fn corrupt(path: &Path, what: &str) -> Error {
    CoreError::Corrupt(format!("{}: {what}", path.display())).into()
}
