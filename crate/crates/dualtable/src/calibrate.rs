//! Throughput probes for the four cost-model rates.

use std::fs::{self, File, OpenOptions};
use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use crate::error::{Error, Result};

pub const PROBE_BYTES: usize = 64 << 20;
/// Append size used for the attached store probe, roughly one journal group.
const APPEND_CHUNK: usize = 4 << 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub master_write: f64,
    pub master_read: f64,
    pub attached_write: f64,
    pub attached_read: f64,
}

impl Rates {
    /// Config lines that can be appended to a config file.
    pub fn to_config_text(&self) -> String {
        format!(
            "W_M = {:.0}\nR_M = {:.0}\nW_A = {:.0}\nR_A = {:.0}\n",
            self.master_write, self.master_read, self.attached_write, self.attached_read
        )
    }
}

/// Writes and reads a `bytes`-sized probe file per store inside `dir`:
/// one large write for the master store, small appends for the attached
/// store. Probe files are removed afterwards.
pub fn calibrate(dir: &Path, bytes: usize) -> Result<Rates> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let data: Vec<u8> = (0..bytes).map(|i| (i.wrapping_mul(31) >> 3) as u8).collect();

    let master = dir.join("probe_master.tmp");
    let master_write = timed(bytes, || {
        let mut f = File::create(&master)?;
        f.write_all(&data)?;
        f.sync_all()
    })
    .map_err(|e| Error::io(&master, e))?;
    let master_read = timed(bytes, || read_all(&master, bytes)).map_err(|e| Error::io(&master, e))?;

    let attached = dir.join("probe_attached.tmp");
    let attached_write = timed(bytes, || {
        let mut f = OpenOptions::new().create(true).truncate(true).write(true).open(&attached)?;
        for chunk in data.chunks(APPEND_CHUNK) {
            f.write_all(chunk)?;
        }
        f.sync_all()
    })
    .map_err(|e| Error::io(&attached, e))?;
    let attached_read = timed(bytes, || read_all(&attached, APPEND_CHUNK)).map_err(|e| Error::io(&attached, e))?;

    for p in [&master, &attached] {
        fs::remove_file(p).map_err(|e| Error::io(p, e))?;
    }
    Ok(Rates {
        master_write,
        master_read,
        attached_write,
        attached_read,
    })
}

fn read_all(path: &Path, chunk: usize) -> std::io::Result<()> {
    let mut f = File::open(path)?;
    let mut buf = vec![0u8; chunk.max(1)];
    while f.read(&mut buf)? > 0 {}
    Ok(())
}

fn timed(bytes: usize, f: impl FnOnce() -> std::io::Result<()>) -> std::io::Result<f64> {
    let start = Instant::now();
    f()?;
    let secs = start.elapsed().as_secs_f64().max(1e-9);
    Ok(bytes as f64 / secs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    #[test]
    fn small_probe_yields_usable_rates() {
        let dir = tempfile::tempdir().unwrap();
        let r = calibrate(dir.path(), 1 << 20).unwrap();
        for v in [r.master_write, r.master_read, r.attached_write, r.attached_read] {
            assert!(v.is_finite() && v > 0.0);
        }
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
        let mut c = Config::default();
        c.apply_text(&r.to_config_text()).unwrap();
        c.cost_params(1).unwrap().validate().unwrap();
    }
}
