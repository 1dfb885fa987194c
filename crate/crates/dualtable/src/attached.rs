//! Attached store: the visible delta state of one table, kept in memory and
//! made durable by the journal `t<table>_attached.log`.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use dualtable_core::delta::{DeltaEntry, DeltaOp, DeltaState};
use dualtable_core::journal::{encode_group, replay, JournalRecord};
use dualtable_core::{RecordId, Schema, Value};

use crate::counters::IoCounters;
use crate::error::Result;
use crate::fault::{self, Fs};

pub fn journal_file_name(table_id: u32) -> String {
    format!("t{table_id}_attached.log")
}

#[derive(Debug)]
pub struct AttachedStore {
    path: PathBuf,
    schema: Schema,
    fs: Fs,
    counters: Arc<IoCounters>,
    state: DeltaState,
    file: Option<File>,
    epoch: u64,
    next_seq: u64,
}

impl AttachedStore {
    /// Opens the journal of `table_id`, replaying its committed statements.
    ///
    /// A journal written for another epoch refers to segments that no longer
    /// exist and is discarded. A torn tail is cut off.
    pub fn open(
        dir: &Path,
        table_id: u32,
        schema: Schema,
        epoch: u64,
        fs: Fs,
        counters: Arc<IoCounters>,
    ) -> Result<Self> {
        let mut store = AttachedStore {
            path: dir.join(journal_file_name(table_id)),
            schema,
            fs,
            counters,
            state: DeltaState::new(),
            file: None,
            epoch,
            next_seq: 0,
        };
        if !store.path.exists() {
            store.reset(epoch)?;
            return Ok(store);
        }
        let bytes = fault::read(&store.path)?;
        let r = replay(&bytes, &store.schema);
        if r.epoch != Some(epoch) {
            store.reset(epoch)?;
            return Ok(store);
        }
        if r.truncated {
            store.fs.truncate(&store.path, r.valid_len as u64)?;
        }
        store.state = r.state;
        store.next_seq = r.last_seq.map_or(0, |s| s + 1);
        store.file = Some(store.fs.open_append(&store.path)?);
        Ok(store)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn len(&self) -> usize {
        self.state.len()
    }

    pub fn is_empty(&self) -> bool {
        self.state.is_empty()
    }

    /// Logical size of all visible entries.
    pub fn size_bytes(&self) -> u64 {
        self.state.size_bytes()
    }

    /// Visible entry for `id`, without touching the read counters.
    pub fn get(&self, id: RecordId) -> Option<&DeltaEntry> {
        self.state.get(id)
    }

    /// Applies the operations of one statement as a single journal group.
    /// Either all of them become visible (and durable) or none does.
    /// Returns the logical bytes written.
    pub fn apply(&mut self, ops: &[DeltaOp]) -> Result<u64> {
        if ops.is_empty() {
            return Ok(0);
        }
        self.state.check_batch(ops, &self.schema)?;
        let mut buf = Vec::new();
        encode_group(self.next_seq, ops, &mut buf);
        let file = match &mut self.file {
            Some(f) => f,
            None => self.file.insert(self.fs.open_append(&self.path)?),
        };
        if let Err(e) = self.fs.append(file, &self.path, &buf) {
            self.file = None;
            return Err(e);
        }
        self.next_seq += 1;
        let written = self.state.apply_batch(ops, &self.schema)?;
        self.counters.add_attached_written(written);
        Ok(written)
    }

    pub fn put_patch(&mut self, record_id: RecordId, cells: BTreeMap<u16, Value>) -> Result<u64> {
        self.apply(&[DeltaOp::Patch { record_id, cells }])
    }

    pub fn put_delete_marker(&mut self, record_id: RecordId) -> Result<u64> {
        self.apply(&[DeltaOp::Delete { record_id }])
    }

    /// Visible entries with ids in `[lo, hi)` in ascending id order. Each
    /// yielded entry is charged to the attached read counter.
    pub fn scan_deltas(
        &self,
        lo: RecordId,
        hi: Option<RecordId>,
    ) -> impl Iterator<Item = &DeltaEntry> + Send + '_ {
        let counters = &self.counters;
        self.state.range(lo, hi).inspect(move |e| counters.add_attached_read(e.logical_size()))
    }

    /// Starts an empty journal for `epoch`, replacing the current one
    /// atomically.
    pub fn reset(&mut self, epoch: u64) -> Result<()> {
        self.file = None;
        let mut buf = Vec::new();
        JournalRecord::Epoch { epoch }.encode(&mut buf);
        self.fs.write_atomic(&self.path, &buf)?;
        self.state.clear();
        self.epoch = epoch;
        self.next_seq = 0;
        self.file = Some(self.fs.open_append(&self.path)?);
        Ok(())
    }

    /// Empties the store and truncates the journal.
    pub fn clear(&mut self) -> Result<()> {
        self.reset(self.epoch)
    }
}
