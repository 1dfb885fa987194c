//! Ratio sweeps over a synthetic table.
//!
//! For every grid ratio the modification runs three times on identical
//! copies of a base table: forced EDIT, forced OVERWRITE, and the plan the
//! cost model picks. Each run is followed by `k` full union reads. Written
//! byte columns cover the modification; read byte columns cover the `k`
//! reads, which is what the cost model charges for. The scan a statement
//! performs to locate its rows costs the same under both plans and is left
//! out.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use dualtable_core::cost::{delete_plan_costs, update_plan_costs, PlanCosts};
use dualtable_core::delta::patch_size;
use dualtable_core::{CostParams, ModOp, Plan, Value};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::Config;
use crate::counters::{oracle_cost, ByteCounts};
use crate::engine::{copy_database, Database, Outcome};
use crate::error::{Error, Result};

pub const TABLE: &str = "bench";

pub const CSV_HEADER: [&str; 10] = [
    "ratio",
    "series",
    "plan",
    "model_cost_s",
    "oracle_cost_s",
    "master_read",
    "master_written",
    "attached_read",
    "attached_written",
    "wall_s",
];

#[derive(Debug, Clone)]
pub struct BenchSpec {
    pub op: ModOp,
    pub rows: u64,
    /// Number of INT64 columns, at least two: a selector and a payload.
    pub cols: usize,
    pub grid: Vec<f64>,
    pub k: u32,
    /// Rates and storage settings. `R_M` must be set.
    pub config: Config,
    pub repetitions: u32,
    pub seed: u64,
    /// Scratch space for the base table and the per-run copies.
    pub work_dir: PathBuf,
    /// Upper bound on grid points run concurrently.
    pub threads: usize,
}

impl BenchSpec {
    pub fn validate(&self) -> Result<CostParams> {
        if self.cols < 2 {
            return Err(Error::Config("bench needs at least 2 columns".into()));
        }
        if self.rows == 0 {
            return Err(Error::Config("bench needs at least one row".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if let Some(r) = self.grid.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::Config(format!("grid ratio {r} is outside [0, 1]")));
        }
        let p = self.config.cost_params(self.k)?;
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Series {
    Edit,
    Overwrite,
    Model,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub ratio: f64,
    pub repetition: u32,
    pub series: Series,
    pub plan: Plan,
    pub rows_matched: u64,
    /// Predicted cost of `plan` for the bytes this run actually changed.
    pub model_cost_s: f64,
    pub oracle_cost_s: f64,
    pub bytes: ByteCounts,
    pub wall_s: f64,
}

#[derive(Serialize)]
struct CsvRecord {
    ratio: f64,
    series: Series,
    plan: Plan,
    model_cost_s: f64,
    oracle_cost_s: f64,
    master_read: u64,
    master_written: u64,
    attached_read: u64,
    attached_written: u64,
    wall_s: String,
}

pub fn write_bench_csv(rows: &[BenchRow], out: &mut dyn Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let csv_err = |e: csv::Error| Error::io("<csv>", e.into());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.serialize(CsvRecord {
            ratio: r.ratio,
            series: r.series,
            plan: r.plan,
            model_cost_s: r.model_cost_s,
            oracle_cost_s: r.oracle_cost_s,
            master_read: r.bytes.master_read,
            master_written: r.bytes.master_written,
            attached_read: r.bytes.attached_read,
            attached_written: r.bytes.attached_written,
            wall_s: format!("{:.6}", r.wall_s),
        })
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))
}

/// Rows of the base table: `c0` is a random permutation of `0..rows`, so
/// `c0 < n` selects exactly `n` rows at random positions.
pub fn base_rows(rows: u64, cols: usize, seed: u64) -> Vec<Vec<Value>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut selector: Vec<i64> = (0..rows as i64).collect();
    selector.shuffle(&mut rng);
    selector
        .into_iter()
        .map(|s| {
            let mut row = Vec::with_capacity(cols);
            row.push(Value::Int(s));
            row.extend((1..cols).map(|_| Value::Int(rng.gen_range(0..1_000_000))));
            row
        })
        .collect()
}

pub fn statement_text(op: ModOp, rows: u64, ratio: f64, series: Series, k: u32) -> String {
    let n = (ratio * rows as f64).round() as u64;
    let plan = match series {
        Series::Edit => ", PLAN = EDIT",
        Series::Overwrite => ", PLAN = OVERWRITE",
        Series::Model => "",
    };
    let options = format!("WITH RATIO = {ratio}, K = {k}{plan}");
    match op {
        ModOp::Update => format!("UPDATE {TABLE} SET c1 = c1 + 1 WHERE c0 < {n} {options}"),
        ModOp::Delete => format!("DELETE FROM {TABLE} WHERE c0 < {n} {options}"),
    }
}

fn build_base(spec: &BenchSpec, dir: &Path) -> Result<()> {
    let mut db = Database::open(Config {
        data_dir: dir.to_owned(),
        ..spec.config.clone()
    })?;
    let cols: Vec<String> = (0..spec.cols).map(|i| format!("c{i} INT64")).collect();
    db.parse_and_execute(&format!("CREATE TABLE {TABLE} ({})", cols.join(", ")))?;
    db.insert(TABLE, base_rows(spec.rows, spec.cols, spec.seed))?;
    Ok(())
}

/// Per-plan model costs for a run that changed `matched` of `rows` rows in
/// a table of `data_size` bytes. For updates the ratio is the fraction of
/// `data_size` the patches occupy.
pub fn run_model_costs(
    op: ModOp,
    data_size: u64,
    rows: u64,
    matched: u64,
    patch_bytes: u64,
    p: &CostParams,
) -> Result<PlanCosts> {
    let d = data_size as f64;
    let costs = match op {
        ModOp::Update => {
            let alpha = if d == 0.0 { 0.0 } else { (matched * patch_bytes) as f64 / d };
            update_plan_costs(d, alpha.min(1.0), p)?
        }
        ModOp::Delete => {
            let beta = if rows == 0 { 0.0 } else { matched as f64 / rows as f64 };
            let row_size = (d / rows.max(1) as f64).max(1.0);
            delete_plan_costs(d, beta, row_size, p)?
        }
    };
    Ok(costs)
}

fn run_one(spec: &BenchSpec, p: &CostParams, base: &Path, dir: &Path, ratio: f64, rep: u32, series: Series) -> Result<BenchRow> {
    if dir.exists() {
        std::fs::remove_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    copy_database(base, dir)?;
    let mut db = Database::open(Config {
        data_dir: dir.to_owned(),
        ..spec.config.clone()
    })?;
    let stats = db.stats(TABLE)?;
    let text = statement_text(spec.op, spec.rows, ratio, series, spec.k);
    let started = Instant::now();
    let c0 = db.counters();
    let report = match db.parse_and_execute(&text)? {
        Outcome::Report(r) => r,
        other => unreachable!("modification returned {other:?}"),
    };
    let c1 = db.counters();
    for _ in 0..spec.k {
        db.union_read(TABLE, None, None)?;
    }
    let c2 = db.counters();
    let wall_s = started.elapsed().as_secs_f64();
    drop(db);
    std::fs::remove_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let written = c1 - c0;
    let read = c2 - c1;
    let bytes = ByteCounts {
        master_read: read.master_read,
        master_written: written.master_written,
        attached_read: read.attached_read,
        attached_written: written.attached_written,
        attached_entries_read: read.attached_entries_read,
    };
    let plan = report.plan_used.expect("modification has a plan");
    let patch_bytes = patch_size([&Value::Int(0)]);
    let costs = run_model_costs(spec.op, stats.data_size, stats.row_count, report.rows_matched, patch_bytes, p)?;
    Ok(BenchRow {
        ratio,
        repetition: rep,
        series,
        plan,
        rows_matched: report.rows_matched,
        model_cost_s: match plan {
            Plan::Edit => costs.edit,
            Plan::Overwrite => costs.overwrite,
        },
        oracle_cost_s: oracle_cost(&bytes, p),
        bytes,
        wall_s,
    })
}

/// Runs the sweep. Rows come out ordered by repetition, grid point, then
/// series (edit, overwrite, model).
pub fn bench_sweep(spec: &BenchSpec) -> Result<Vec<BenchRow>> {
    let p = spec.validate()?;
    let base = spec.work_dir.join("base");
    if base.exists() {
        std::fs::remove_dir_all(&base).map_err(|e| Error::io(&base, e))?;
    }
    build_base(spec, &base)?;

    let points: Vec<(u32, usize)> = (0..spec.repetitions)
        .flat_map(|rep| (0..spec.grid.len()).map(move |g| (rep, g)))
        .collect();
    let results: Mutex<Vec<Option<Result<Vec<BenchRow>>>>> = Mutex::new((0..points.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let threads = spec.threads.clamp(1, points.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(rep, g)) = points.get(i) else { break };
                let ratio = spec.grid[g];
                let dir = spec.work_dir.join(format!("run{i}"));
                let out = [Series::Edit, Series::Overwrite, Series::Model]
                    .into_iter()
                    .map(|s| run_one(spec, &p, &base, &dir, ratio, rep, s))
                    .collect::<Result<Vec<_>>>();
                results.lock().unwrap()[i] = Some(out);
            });
        }
    });
    std::fs::remove_dir_all(&base).map_err(|e| Error::io(&base, e))?;
    let mut rows = Vec::new();
    for r in results.into_inner().unwrap() {
        rows.extend(r.expect("every point ran")?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dualtable_core::cost::crossover_update;
    use dualtable_core::delta::MARKER_SIZE;

    fn spec(dir: &Path, op: ModOp) -> BenchSpec {
        let mut config = Config::default();
        config.master_read_rate = Some(2e9);
        BenchSpec {
            op,
            rows: 2000,
            cols: 4,
            grid: vec![0.05, 0.2, 0.4],
            k: 1,
            config,
            repetitions: 1,
            seed: 7,
            work_dir: dir.to_owned(),
            threads: 2,
        }
    }

    fn csv_without_wall(rows: &[BenchRow]) -> String {
        let mut out = Vec::new();
        write_bench_csv(rows, &mut out).unwrap();
        String::from_utf8(out)
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_owned())
            .collect::<Vec<_>>()
            .join("\n")
    }

    #[test]
    fn same_seed_same_csv() {
        let dir = tempfile::tempdir().unwrap();
        let s = spec(dir.path(), ModOp::Update);
        let a = bench_sweep(&s).unwrap();
        let b = bench_sweep(&s).unwrap();
        assert_eq!(csv_without_wall(&a), csv_without_wall(&b));
        assert_eq!(a.len(), 9);
        let mut other = s.clone();
        other.seed = 8;
        other.threads = 1;
        let c = bench_sweep(&other).unwrap();
        // Byte counts do not depend on which rows are picked.
        assert_eq!(csv_without_wall(&a), csv_without_wall(&c));
    }

    #[test]
    fn series_behave() {
        let dir = tempfile::tempdir().unwrap();
        let s = spec(dir.path(), ModOp::Update);
        let rows = bench_sweep(&s).unwrap();
        let alpha_star = crossover_update(&s.validate().unwrap()).unwrap();
        for r in &rows {
            assert_eq!(r.rows_matched, (r.ratio * 2000.0).round() as u64);
            match r.series {
                Series::Edit => {
                    assert_eq!(r.plan, Plan::Edit);
                    assert_eq!(r.bytes.master_written, 0);
                    assert_eq!(r.bytes.attached_written, r.rows_matched * 22);
                }
                Series::Overwrite => {
                    assert_eq!(r.plan, Plan::Overwrite);
                    assert_eq!(r.bytes.attached_written, 0);
                }
                Series::Model => {
                    let want = if r.ratio < alpha_star { Plan::Edit } else { Plan::Overwrite };
                    assert_eq!(r.plan, want);
                }
            }
            let err = (r.model_cost_s - r.oracle_cost_s).abs() / r.oracle_cost_s;
            assert!(err < 0.05, "{r:?}");
        }
    }

    #[test]
    fn delete_markers_are_counted() {
        let dir = tempfile::tempdir().unwrap();
        let rows = bench_sweep(&spec(dir.path(), ModOp::Delete)).unwrap();
        for r in rows.iter().filter(|r| r.series == Series::Edit) {
            assert_eq!(r.bytes.attached_written, r.rows_matched * MARKER_SIZE);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = spec(dir.path(), ModOp::Update);
        s.grid.push(1.5);
        assert!(s.validate().is_err());
        let mut s = spec(dir.path(), ModOp::Update);
        s.config.master_read_rate = None;
        assert!(s.validate().is_err());
        let mut s = spec(dir.path(), ModOp::Update);
        s.repetitions = 0;
        assert!(s.validate().is_err());
    }
}
