//! File-system access with optional fault injection.
//!
//! Every mutating call (create, write, sync, rename, remove, truncate) is a
//! numbered fault point. A [`FaultInjector`] can fail one of them: a write
//! that fails persists a prefix of its buffer first, and every later point
//! fails as well, which models a process that crashed at that instant.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug)]
struct Inner {
    fail_at: Option<u64>,
    ops: AtomicU64,
    fired: AtomicBool,
}

#[derive(Debug, Clone)]
pub struct FaultInjector {
    inner: Arc<Inner>,
}

impl FaultInjector {
    /// Counts fault points without ever failing.
    pub fn counting() -> Self {
        Self::build(None)
    }

    /// Fails the fault point with index `n` (zero-based) and all after it.
    pub fn fail_at(n: u64) -> Self {
        Self::build(Some(n))
    }

    fn build(fail_at: Option<u64>) -> Self {
        FaultInjector {
            inner: Arc::new(Inner {
                fail_at,
                ops: AtomicU64::new(0),
                fired: AtomicBool::new(false),
            }),
        }
    }

    /// Fault points passed so far.
    pub fn ops(&self) -> u64 {
        self.inner.ops.load(Ordering::SeqCst)
    }

    pub fn fired(&self) -> bool {
        self.inner.fired.load(Ordering::SeqCst)
    }

    /// Returns `true` when this point must fail.
    fn hit(&self) -> bool {
        let n = self.inner.ops.fetch_add(1, Ordering::SeqCst);
        if self.fired() || self.inner.fail_at.is_some_and(|f| n >= f) {
            self.inner.fired.store(true, Ordering::SeqCst);
            true
        } else {
            false
        }
    }
}

fn injected() -> io::Error {
    io::Error::other("injected fault")
}

/// Handle for all writes the engine makes to its data directory.
#[derive(Debug, Clone, Default)]
pub struct Fs {
    faults: Option<FaultInjector>,
    sync: bool,
}

impl Fs {
    pub fn new(sync: bool, faults: Option<FaultInjector>) -> Self {
        Fs { faults, sync }
    }

    fn point(&self) -> io::Result<()> {
        match &self.faults {
            Some(f) if f.hit() => Err(injected()),
            _ => Ok(()),
        }
    }

    fn write_through(&self, file: &mut File, bytes: &[u8]) -> io::Result<()> {
        if let Some(f) = &self.faults {
            if f.hit() {
                file.write_all(&bytes[..bytes.len() / 2])?;
                return Err(injected());
            }
        }
        file.write_all(bytes)?;
        if self.sync {
            self.point()?;
            file.sync_data()?;
        }
        Ok(())
    }

    /// Creates (or replaces) `path` with `bytes`.
    pub fn write_file(&self, path: &Path, bytes: &[u8]) -> Result<()> {
        let io = || -> io::Result<()> {
            self.point()?;
            let mut f = File::create(path)?;
            self.write_through(&mut f, bytes)
        };
        io().map_err(|e| Error::io(path, e))
    }

    /// Replaces `path` by writing a sibling temp file and renaming it over.
    pub fn write_atomic(&self, path: &Path, bytes: &[u8]) -> Result<()> {
        let tmp = tmp_path(path);
        self.write_file(&tmp, bytes)?;
        self.rename(&tmp, path)
    }

    pub fn rename(&self, from: &Path, to: &Path) -> Result<()> {
        self.point()
            .and_then(|_| fs::rename(from, to))
            .map_err(|e| Error::io(to, e))
    }

    /// Removes a file; a missing file is not an error.
    pub fn remove_file(&self, path: &Path) -> Result<()> {
        self.point().map_err(|e| Error::io(path, e))?;
        match fs::remove_file(path) {
            Err(e) if e.kind() != io::ErrorKind::NotFound => Err(Error::io(path, e)),
            _ => Ok(()),
        }
    }

    pub fn open_append(&self, path: &Path) -> Result<File> {
        self.point()
            .and_then(|_| OpenOptions::new().append(true).open(path))
            .map_err(|e| Error::io(path, e))
    }

    pub fn append(&self, file: &mut File, path: &Path, bytes: &[u8]) -> Result<()> {
        self.write_through(file, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn truncate(&self, path: &Path, len: u64) -> Result<()> {
        let io = || -> io::Result<()> {
            self.point()?;
            let f = OpenOptions::new().write(true).open(path)?;
            f.set_len(len)?;
            if self.sync {
                f.sync_data()?;
            }
            Ok(())
        };
        io().map_err(|e| Error::io(path, e))
    }
}

pub fn tmp_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}

/// Reads a whole file.
pub fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}
