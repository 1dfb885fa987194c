//! Engine configuration.
//!
//! The file format is one `key = value` pair per line; `#` starts a comment.
//! Rates are in bytes per second.
//!
//! ```text
//! data_dir = ./db
//! W_M = 1e9
//! R_M = 2e9
//! W_A = 8e8
//! R_A = 5e8
//! k_default = 10
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use dualtable_core::delta::MARKER_SIZE;
use dualtable_core::CostParams;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub data_dir: PathBuf,
    /// `W_M`
    pub master_write_rate: f64,
    /// `R_M`. Has no default; cost decisions fail until it is set.
    pub master_read_rate: Option<f64>,
    /// `W_A`
    pub attached_write_rate: f64,
    /// `R_A`
    pub attached_read_rate: f64,
    pub k_default: u32,
    pub compact_threshold: f64,
    pub default_ratio: f64,
    pub ewma_weight: f64,
    pub segment_target_bytes: u64,
    /// fsync journal appends and new files.
    pub sync_writes: bool,
    /// Run COMPACT after a statement when the attached store passes
    /// `compact_threshold`.
    pub auto_compact: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            data_dir: PathBuf::from("dualtable-data"),
            master_write_rate: 1e9,
            master_read_rate: None,
            attached_write_rate: 8e8,
            attached_read_rate: 5e8,
            k_default: 10,
            compact_threshold: 0.25,
            default_ratio: 0.05,
            ewma_weight: 0.5,
            segment_target_bytes: 64 << 20,
            sync_writes: false,
            auto_compact: false,
        }
    }
}

impl Config {
    pub fn with_data_dir(dir: impl Into<PathBuf>) -> Self {
        Config {
            data_dir: dir.into(),
            ..Config::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Config::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {}", n + 1, strip(e))))?;
        }
        Ok(())
    }

    /// Applies a `key=value` override as given to `--set`.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got `{pair}`")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim_matches('"');
        match key {
            "data_dir" => self.data_dir = PathBuf::from(value),
            "W_M" => self.master_write_rate = rate(key, value)?,
            "R_M" => self.master_read_rate = Some(rate(key, value)?),
            "W_A" => self.attached_write_rate = rate(key, value)?,
            "R_A" => self.attached_read_rate = rate(key, value)?,
            "k_default" => self.k_default = parse(key, value)?,
            "compact_threshold" => {
                self.compact_threshold = parse(key, value)?;
                if !(self.compact_threshold >= 0.0) {
                    return Err(Error::Config(format!("{key} must be non-negative")));
                }
            }
            "default_ratio" => self.default_ratio = unit(key, value)?,
            "ewma_weight" => self.ewma_weight = unit(key, value)?,
            "segment_target_bytes" => {
                self.segment_target_bytes = parse(key, value)?;
                if self.segment_target_bytes == 0 {
                    return Err(Error::Config(format!("{key} must be positive")));
                }
            }
            "sync_writes" => self.sync_writes = parse(key, value)?,
            "auto_compact" => self.auto_compact = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Cost parameters with `k` successive reads.
    pub fn cost_params(&self, k: u32) -> Result<CostParams> {
        let master_read_rate = self.master_read_rate.ok_or_else(|| {
            Error::Config("R_M (master read rate) is not configured".into())
        })?;
        let p = CostParams {
            master_write_rate: self.master_write_rate,
            master_read_rate,
            attached_write_rate: self.attached_write_rate,
            attached_read_rate: self.attached_read_rate,
            successive_reads: k,
            marker_size: MARKER_SIZE as f64,
        };
        p.validate()?;
        Ok(p)
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for {key}")))
}

fn rate(key: &str, value: &str) -> Result<f64> {
    let r: f64 = parse(key, value)?;
    if r.is_finite() && r > 0.0 {
        Ok(r)
    } else {
        Err(Error::Config(format!("{key} must be a positive rate")))
    }
}

fn unit(key: &str, value: &str) -> Result<f64> {
    let r: f64 = parse(key, value)?;
    if (0.0..=1.0).contains(&r) {
        Ok(r)
    } else {
        Err(Error::Config(format!("{key} must be in [0, 1]")))
    }
}
