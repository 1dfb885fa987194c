//! System catalog: table registry, file-id allocation, statistics and ratio
//! history, persisted as `catalog.json` with write-temp-then-rename.
//!
//! Each table also records its current master segment list and an epoch
//! that increases whenever that list is replaced wholesale. The catalog
//! commit is the point at which a segment swap becomes durable.

use std::path::{Path, PathBuf};

use dualtable_core::ratio::{estimate_ratio, RatioHistory};
use dualtable_core::{Schema, TableStats};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fault::{self, Fs};

pub const CATALOG_FILE: &str = "catalog.json";

/// Histories kept per table; the least recently recorded key is evicted.
const MAX_HISTORY_KEYS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentMeta {
    pub file_id: u32,
    pub row_count: u64,
    /// File size.
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableDescriptor {
    pub name: String,
    pub table_id: u32,
    pub schema: Schema,
    /// Next file id to hand out. Kept as `u64` so that exhaustion of the
    /// 32-bit id space is representable.
    pub next_file_id: u64,
    pub epoch: u64,
    /// Live segments in ascending file id order.
    pub segments: Vec<SegmentMeta>,
    pub stats: TableStats,
    pub history: Vec<RatioHistory>,
}

/// Rates as last configured, recorded for inspection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoredCostParams {
    pub master_write_rate: f64,
    pub master_read_rate: Option<f64>,
    pub attached_write_rate: f64,
    pub attached_read_rate: f64,
    pub k_default: u32,
    pub marker_size: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CatalogData {
    pub next_table_id: u32,
    pub tables: Vec<TableDescriptor>,
    pub cost_params: Option<StoredCostParams>,
}

#[derive(Debug)]
pub struct Catalog {
    path: PathBuf,
    fs: Fs,
    data: CatalogData,
}

impl Catalog {
    /// Loads the catalog in `dir`, or starts an empty one if none exists.
    pub fn open(dir: &Path, fs: Fs) -> Result<Self> {
        let path = dir.join(CATALOG_FILE);
        let data = if path.exists() {
            let bytes = fault::read(&path)?;
            serde_json::from_slice(&bytes).map_err(|e| Error::Catalog(e.to_string()))?
        } else {
            CatalogData::default()
        };
        Ok(Catalog { path, fs, data })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn commit(&self) -> Result<()> {
        let bytes =
            serde_json::to_vec_pretty(&self.data).map_err(|e| Error::Catalog(e.to_string()))?;
        self.fs.write_atomic(&self.path, &bytes)
    }

    pub fn data(&self) -> &CatalogData {
        &self.data
    }

    pub fn set_cost_params(&mut self, p: StoredCostParams) {
        self.data.cost_params = Some(p);
    }

    pub fn tables(&self) -> impl Iterator<Item = &TableDescriptor> {
        self.data.tables.iter()
    }

    pub fn table(&self, name: &str) -> Result<&TableDescriptor> {
        self.data
            .tables
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::UnknownTable(name.to_owned()))
    }

    pub fn table_mut(&mut self, name: &str) -> Result<&mut TableDescriptor> {
        self.data
            .tables
            .iter_mut()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::UnknownTable(name.to_owned()))
    }

    pub fn create_table(&mut self, name: &str, schema: Schema) -> Result<&TableDescriptor> {
        if self.table(name).is_ok() {
            return Err(Error::TableExists(name.to_owned()));
        }
        let table_id = self.data.next_table_id;
        self.data.next_table_id = table_id.checked_add(1).ok_or(Error::TableIdsExhausted)?;
        self.data.tables.push(TableDescriptor {
            name: name.to_owned(),
            table_id,
            schema,
            next_file_id: 0,
            epoch: 0,
            segments: Vec::new(),
            stats: TableStats::default(),
            history: Vec::new(),
        });
        self.commit()?;
        Ok(self.data.tables.last().unwrap())
    }

    pub fn drop_table(&mut self, name: &str) -> Result<TableDescriptor> {
        let idx = self
            .data
            .tables
            .iter()
            .position(|t| t.name == name)
            .ok_or_else(|| Error::UnknownTable(name.to_owned()))?;
        let t = self.data.tables.remove(idx);
        self.commit()?;
        Ok(t)
    }

    /// Returns the table's next file id and persists the increment before
    /// returning, so an id is never handed out twice even across crashes.
    pub fn allocate_file_id(&mut self, name: &str) -> Result<u32> {
        let t = self.table_mut(name)?;
        let id = u32::try_from(t.next_file_id).map_err(|_| Error::FileIdsExhausted(name.to_owned()))?;
        t.next_file_id += 1;
        self.commit()?;
        Ok(id)
    }

    pub fn estimate_ratio(&self, name: &str, key: u64, hint: Option<f64>, default: f64) -> Result<f64> {
        let t = self.table(name)?;
        let h = t.history.iter().find(|h| h.key == key);
        Ok(estimate_ratio(hint, h, default)?)
    }

    /// Records a sample in memory; the caller commits.
    pub fn record_observed_ratio(&mut self, name: &str, key: u64, observed: f64, weight: f64) -> Result<()> {
        let t = self.table_mut(name)?;
        let mut h = match t.history.iter().position(|h| h.key == key) {
            Some(i) => t.history.remove(i),
            None => RatioHistory::new(key),
        };
        h.record(observed, weight)?;
        t.history.push(h);
        if t.history.len() > MAX_HISTORY_KEYS {
            t.history.remove(0);
        }
        Ok(())
    }
}
