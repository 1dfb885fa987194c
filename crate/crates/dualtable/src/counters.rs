//! Byte counters for both stores.
//!
//! Master counters count segment file bytes. Attached counters count the
//! logical size of delta entries (marker or key plus cells), which is the
//! quantity the cost model reasons about.

use std::ops::Sub;
use std::sync::atomic::{AtomicU64, Ordering};

use dualtable_core::CostParams;
use serde::Serialize;

#[derive(Debug, Default)]
pub struct IoCounters {
    master_read: AtomicU64,
    master_written: AtomicU64,
    attached_read: AtomicU64,
    attached_written: AtomicU64,
    attached_entries_read: AtomicU64,
}

impl IoCounters {
    pub fn add_master_read(&self, n: u64) {
        self.master_read.fetch_add(n, Ordering::Relaxed);
    }

    pub fn add_master_written(&self, n: u64) {
        self.master_written.fetch_add(n, Ordering::Relaxed);
    }

    pub fn add_attached_read(&self, n: u64) {
        self.attached_read.fetch_add(n, Ordering::Relaxed);
        self.attached_entries_read.fetch_add(1, Ordering::Relaxed);
    }

    pub fn add_attached_written(&self, n: u64) {
        self.attached_written.fetch_add(n, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> ByteCounts {
        ByteCounts {
            master_read: self.master_read.load(Ordering::Relaxed),
            master_written: self.master_written.load(Ordering::Relaxed),
            attached_read: self.attached_read.load(Ordering::Relaxed),
            attached_written: self.attached_written.load(Ordering::Relaxed),
            attached_entries_read: self.attached_entries_read.load(Ordering::Relaxed),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ByteCounts {
    pub master_read: u64,
    pub master_written: u64,
    pub attached_read: u64,
    pub attached_written: u64,
    /// Delta entries handed to readers.
    pub attached_entries_read: u64,
}

impl Sub for ByteCounts {
    type Output = ByteCounts;

    fn sub(self, rhs: ByteCounts) -> ByteCounts {
        ByteCounts {
            master_read: self.master_read - rhs.master_read,
            master_written: self.master_written - rhs.master_written,
            attached_read: self.attached_read - rhs.attached_read,
            attached_written: self.attached_written - rhs.attached_written,
            attached_entries_read: self.attached_entries_read - rhs.attached_entries_read,
        }
    }
}

/// Seconds the given transfers take at the configured rates.
pub fn oracle_cost(bytes: &ByteCounts, p: &CostParams) -> f64 {
    bytes.master_read as f64 / p.master_read_rate
        + bytes.master_written as f64 / p.master_write_rate
        + bytes.attached_read as f64 / p.attached_read_rate
        + bytes.attached_written as f64 / p.attached_write_rate
}
