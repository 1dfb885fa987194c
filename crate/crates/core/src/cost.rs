//! Linear I/O cost model for choosing between rewriting the master data
//! (OVERWRITE) and recording changes in the attached store (EDIT).
//!
//! Every transfer costs `bytes / rate` seconds. The margins returned by
//! [`cost_update`] and [`cost_delete`] are `cost(OVERWRITE) - cost(EDIT)`,
//! so a positive margin means EDIT is cheaper.

use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Plan {
    Edit,
    Overwrite,
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Plan::Edit => "EDIT",
            Plan::Overwrite => "OVERWRITE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModOp {
    Update,
    Delete,
}

impl fmt::Display for ModOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModOp::Update => "update",
            ModOp::Delete => "delete",
        })
    }
}

/// Transfer rates in bytes per second plus the read-count and marker-size
/// inputs of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub master_write_rate: f64,
    pub master_read_rate: f64,
    pub attached_write_rate: f64,
    pub attached_read_rate: f64,
    /// Full-table reads expected after the modification.
    pub successive_reads: u32,
    /// Bytes stored per delete marker.
    pub marker_size: f64,
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        let rate_ok = |r: f64| r.is_finite() && r > 0.0;
        if !rate_ok(self.master_write_rate) {
            return Err(CoreError::InvalidCostParams("master write rate must be positive"));
        }
        if !rate_ok(self.master_read_rate) {
            return Err(CoreError::InvalidCostParams("master read rate must be positive"));
        }
        if !rate_ok(self.attached_write_rate) {
            return Err(CoreError::InvalidCostParams("attached write rate must be positive"));
        }
        if !rate_ok(self.attached_read_rate) {
            return Err(CoreError::InvalidCostParams("attached read rate must be positive"));
        }
        if !(self.marker_size.is_finite() && self.marker_size > 0.0) {
            return Err(CoreError::InvalidCostParams("marker size must be positive"));
        }
        Ok(())
    }

    pub fn with_k(self, k: u32) -> Self {
        CostParams {
            successive_reads: k,
            ..self
        }
    }

    fn k(&self) -> f64 {
        f64::from(self.successive_reads)
    }
}

fn check_ratio(r: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&r) {
        Ok(r)
    } else {
        Err(CoreError::InvalidRatio(r))
    }
}

fn check_size(d: f64, what: &'static str) -> Result<f64> {
    if d.is_finite() && d >= 0.0 {
        Ok(d)
    } else {
        Err(CoreError::InvalidCostParams(what))
    }
}

/// Total seconds of each plan, including the `k` reads that follow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanCosts {
    pub overwrite: f64,
    pub edit: f64,
}

impl PlanCosts {
    pub fn margin(&self) -> f64 {
        self.overwrite - self.edit
    }
}

/// Plan costs for updating a fraction `alpha` of `data_size` bytes.
pub fn update_plan_costs(data_size: f64, alpha: f64, p: &CostParams) -> Result<PlanCosts> {
    p.validate()?;
    let d = check_size(data_size, "data size must be non-negative")?;
    let a = check_ratio(alpha)?;
    let k = p.k();
    Ok(PlanCosts {
        overwrite: d / p.master_write_rate + k * d / p.master_read_rate,
        edit: a * d / p.attached_write_rate
            + k * (a * d / p.attached_read_rate + d / p.master_read_rate),
    })
}

/// Plan costs for deleting a fraction `beta` of the rows of a table of
/// `data_size` bytes whose rows average `row_size` bytes.
pub fn delete_plan_costs(
    data_size: f64,
    beta: f64,
    row_size: f64,
    p: &CostParams,
) -> Result<PlanCosts> {
    p.validate()?;
    let d = check_size(data_size, "data size must be non-negative")?;
    let b = check_ratio(beta)?;
    if !(row_size.is_finite() && row_size > 0.0) {
        return Err(CoreError::InvalidCostParams("row size must be positive"));
    }
    let k = p.k();
    let kept = (1.0 - b) * d;
    let markers = b * d * p.marker_size / row_size;
    Ok(PlanCosts {
        overwrite: kept / p.master_write_rate + k * kept / p.master_read_rate,
        edit: markers / p.attached_write_rate
            + k * (markers / p.attached_read_rate + d / p.master_read_rate),
    })
}

/// `D/W_M - alpha * (D/W_A + k*D/R_A)`.
pub fn cost_update(data_size: f64, alpha: f64, p: &CostParams) -> Result<f64> {
    p.validate()?;
    let d = check_size(data_size, "data size must be non-negative")?;
    let a = check_ratio(alpha)?;
    Ok(d / p.master_write_rate - a * (d / p.attached_write_rate + p.k() * d / p.attached_read_rate))
}

/// `D/W_M - beta * (D/W_M + k*D/R_M + (m/d)*D/W_A + k*(m/d)*D/R_A)`.
pub fn cost_delete(data_size: f64, beta: f64, row_size: f64, p: &CostParams) -> Result<f64> {
    p.validate()?;
    let d = check_size(data_size, "data size must be non-negative")?;
    let b = check_ratio(beta)?;
    if !(row_size.is_finite() && row_size > 0.0) {
        return Err(CoreError::InvalidCostParams("row size must be positive"));
    }
    let k = p.k();
    let md = p.marker_size / row_size;
    Ok(d / p.master_write_rate
        - b * (d / p.master_write_rate
            + k * d / p.master_read_rate
            + md * d / p.attached_write_rate
            + k * md * d / p.attached_read_rate))
}

/// Update ratio at which both plans cost the same, clamped to `[0, 1]`.
pub fn crossover_update(p: &CostParams) -> Result<f64> {
    p.validate()?;
    let x = (1.0 / p.master_write_rate)
        / (1.0 / p.attached_write_rate + p.k() / p.attached_read_rate);
    Ok(x.clamp(0.0, 1.0))
}

/// Delete ratio at which both plans cost the same, clamped to `[0, 1]`.
pub fn crossover_delete(row_size: f64, p: &CostParams) -> Result<f64> {
    p.validate()?;
    if !(row_size.is_finite() && row_size > 0.0) {
        return Err(CoreError::InvalidCostParams("row size must be positive"));
    }
    let k = p.k();
    let md = p.marker_size / row_size;
    let w = 1.0 / p.master_write_rate;
    let x = w / (w + k / p.master_read_rate + md / p.attached_write_rate + k * md / p.attached_read_rate);
    Ok(x.clamp(0.0, 1.0))
}

/// Size and occupancy figures the model needs for one table.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TableStats {
    /// Bytes in master segments.
    pub data_size: u64,
    pub row_count: u64,
    /// `data_size / row_count`, or 0 for an empty table.
    pub avg_row_size: f64,
    /// Logical bytes held by the attached store.
    pub attached_size: u64,
    pub attached_entries: u64,
}

impl TableStats {
    pub fn new(data_size: u64, row_count: u64, attached_size: u64, attached_entries: u64) -> Self {
        let avg_row_size = if row_count == 0 {
            0.0
        } else {
            data_size as f64 / row_count as f64
        };
        TableStats {
            data_size,
            row_count,
            avg_row_size,
            attached_size,
            attached_entries,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanDecision {
    pub plan: Plan,
    /// `cost(OVERWRITE) - cost(EDIT)` in seconds.
    pub cost_margin_seconds: f64,
    pub ratio_used: f64,
}

/// Picks EDIT when its margin is strictly positive, OVERWRITE otherwise.
pub fn choose_plan(op: ModOp, stats: &TableStats, ratio: f64, p: &CostParams) -> Result<PlanDecision> {
    let data = stats.data_size as f64;
    let margin = match op {
        ModOp::Update => cost_update(data, ratio, p)?,
        // An empty table has no meaningful row size; any positive value
        // gives a zero margin because D is zero.
        ModOp::Delete => cost_delete(data, ratio, stats.avg_row_size.max(1.0), p)?,
    };
    Ok(PlanDecision {
        plan: if margin > 0.0 { Plan::Edit } else { Plan::Overwrite },
        cost_margin_seconds: margin,
        ratio_used: ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const GB: f64 = 1e9;

    fn example() -> CostParams {
        CostParams {
            master_write_rate: 1.0 * GB,
            master_read_rate: 2.0 * GB,
            attached_write_rate: 0.8 * GB,
            attached_read_rate: 0.5 * GB,
            successive_reads: 30,
            marker_size: 9.0,
        }
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn worked_update_example() {
        let m = cost_update(100.0 * GB, 0.01, &example()).unwrap();
        assert!(close(m, 38.75, 1e-9), "{m}");
        let d = choose_plan(ModOp::Update, &TableStats::new(100_000_000_000, 1, 0, 0), 0.01, &example()).unwrap();
        assert_eq!(d.plan, Plan::Edit);
        assert!(close(d.cost_margin_seconds, 38.75, 1e-9));
    }

    #[test]
    fn update_edges() {
        let p = example();
        assert!(close(cost_update(100.0 * GB, 0.0, &p).unwrap(), 100.0, 1e-12));
        let m = cost_update(100.0 * GB, 1.0, &p.with_k(0)).unwrap();
        assert!(close(m, -25.0, 1e-9), "{m}");
    }

    #[test]
    fn delete_examples() {
        // m/d = 0.1 with m = 9 means d = 90.
        let p = example();
        let m = cost_delete(100.0 * GB, 0.01, 90.0, &p).unwrap();
        assert!(close(m, 77.875, 1e-9), "{m}");
        let m = cost_delete(100.0 * GB, 1.0, 90.0, &p).unwrap();
        assert!(close(m, -2112.5, 1e-9), "{m}");
        assert!(close(cost_delete(100.0 * GB, 0.0, 90.0, &p).unwrap(), 100.0, 1e-12));
    }

    #[test]
    fn per_plan_costs_agree_with_margins() {
        let p = example();
        for i in 0..=100 {
            let r = f64::from(i) / 100.0;
            let u = update_plan_costs(7.0 * GB, r, &p).unwrap();
            assert!(close(u.margin(), cost_update(7.0 * GB, r, &p).unwrap(), 1e-9));
            let d = delete_plan_costs(7.0 * GB, r, 120.0, &p).unwrap();
            assert!(close(d.margin(), cost_delete(7.0 * GB, r, 120.0, &p).unwrap(), 1e-9));
        }
    }

    #[test]
    fn crossovers() {
        let p = example();
        let a = crossover_update(&p).unwrap();
        let expect = 1.0 / (1.0 / 0.8 + 30.0 / 0.5);
        assert!(close(a, expect, 1e-12));
        assert!((a - 0.01633).abs() < 1e-5);
        assert!(cost_update(GB, a, &p).unwrap().abs() < 1e-9);

        let b = crossover_delete(90.0, &p).unwrap();
        let expect = 1.0 / (1.0 + 30.0 / 2.0 + 0.1 / 0.8 + 30.0 * 0.1 / 0.5);
        assert!(close(b, expect, 1e-12));
        assert!(cost_delete(GB, b, 90.0, &p).unwrap().abs() < 1e-9);

        let big = p.with_k(u32::MAX);
        assert!(crossover_update(&big).unwrap() < 1e-8);
        assert!(crossover_delete(90.0, &big).unwrap() < 1e-8);

        // Attached store faster than master at k = 0: EDIT always wins.
        let fast = CostParams {
            attached_write_rate: 10.0 * GB,
            ..p.with_k(0)
        };
        assert_eq!(crossover_update(&fast).unwrap(), 1.0);
    }

    #[test]
    fn sweep_flips_once() {
        let p = example();
        let stats = TableStats::new(100_000_000_000, 1_000_000, 0, 0);
        let star = crossover_update(&p).unwrap();
        let plans: alloc::vec::Vec<_> = (0..=100)
            .map(|i| choose_plan(ModOp::Update, &stats, f64::from(i) / 100.0, &p).unwrap().plan)
            .collect();
        let flips = plans.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(flips, 1);
        let first_ow = plans.iter().position(|&p| p == Plan::Overwrite).unwrap();
        assert!(f64::from(first_ow as u32) / 100.0 > star);
        assert!(f64::from(first_ow as u32 - 1) / 100.0 <= star);
    }

    #[test]
    fn dense_grid_matches_crossover() {
        let p = example().with_k(1);
        let stats = TableStats::new(1 << 30, 1 << 20, 0, 0);
        let star = crossover_update(&p).unwrap();
        for i in 0..=1000 {
            let r = f64::from(i) / 1000.0;
            let plan = choose_plan(ModOp::Update, &stats, r, &p).unwrap().plan;
            if r < star {
                assert_eq!(plan, Plan::Edit, "r={r}");
            } else if r > star {
                assert_eq!(plan, Plan::Overwrite, "r={r}");
            }
        }
    }

    #[test]
    fn tie_goes_to_overwrite() {
        let p = CostParams {
            master_write_rate: 1.0,
            master_read_rate: 1.0,
            attached_write_rate: 1.0,
            attached_read_rate: 1.0,
            successive_reads: 0,
            marker_size: 9.0,
        };
        let d = choose_plan(ModOp::Update, &TableStats::new(100, 10, 0, 0), 1.0, &p).unwrap();
        assert_eq!(d.cost_margin_seconds, 0.0);
        assert_eq!(d.plan, Plan::Overwrite);
        let d = choose_plan(ModOp::Update, &TableStats::default(), 0.5, &p).unwrap();
        assert_eq!(d.plan, Plan::Overwrite);
    }

    #[test]
    fn invalid_inputs() {
        let mut p = example();
        assert!(cost_update(1.0, 1.5, &p).is_err());
        assert!(cost_update(1.0, -0.1, &p).is_err());
        assert!(cost_update(1.0, f64::NAN, &p).is_err());
        assert!(cost_delete(1.0, 0.5, 0.0, &p).is_err());
        p.master_read_rate = 0.0;
        assert!(cost_update(1.0, 0.5, &p).is_err());
        p.master_read_rate = f64::INFINITY;
        assert!(p.validate().is_err());
    }

    fn params() -> impl Strategy<Value = CostParams> {
        (1e6..1e10f64, 1e6..1e10f64, 1e6..1e10f64, 1e6..1e10f64, 0u32..100, 1.0..64.0f64).prop_map(
            |(wm, rm, wa, ra, k, m)| CostParams {
                master_write_rate: wm,
                master_read_rate: rm,
                attached_write_rate: wa,
                attached_read_rate: ra,
                successive_reads: k,
                marker_size: m,
            },
        )
    }

    proptest! {
        #[test]
        fn strictly_decreasing(p in params(), d in 1e3..1e12f64, a in 0.0..0.99f64, step in 0.001..0.01f64, rs in 16.0..4096.0f64) {
            prop_assert!(cost_update(d, a + step, &p).unwrap() < cost_update(d, a, &p).unwrap());
            prop_assert!(cost_delete(d, a + step, rs, &p).unwrap() < cost_delete(d, a, rs, &p).unwrap());
        }

        #[test]
        fn linear_in_data_size(p in params(), d in 1e3..1e12f64, a in 0.0..=1.0f64, lambda in 0.01..100.0f64) {
            let base = cost_update(d, a, &p).unwrap();
            let scaled = cost_update(lambda * d, a, &p).unwrap();
            prop_assert!((scaled - lambda * base).abs() <= 1e-9 * (lambda * base).abs().max(scaled.abs()).max(1e-12));
            let rows = 1_000_000u64;
            let s1 = TableStats::new(d as u64, rows, 0, 0);
            let s2 = TableStats::new((d * lambda) as u64, rows, 0, 0);
            let p1 = choose_plan(ModOp::Update, &s1, a, &p).unwrap();
            let p2 = choose_plan(ModOp::Update, &s2, a, &p).unwrap();
            // Skip cases within rounding distance of the tie.
            if p1.cost_margin_seconds.abs() > 1e-9 * d / p.master_write_rate {
                prop_assert_eq!(p1.plan, p2.plan);
            }
        }

        #[test]
        fn plan_invariant_under_rate_scaling(p in params(), d in 1e3..1e12f64, a in 0.0..=1.0f64, rs in 16.0..4096.0f64, s in 0.01..100.0f64) {
            let scaled = CostParams {
                master_write_rate: p.master_write_rate * s,
                master_read_rate: p.master_read_rate * s,
                attached_write_rate: p.attached_write_rate * s,
                attached_read_rate: p.attached_read_rate * s,
                ..p
            };
            for (m1, m2) in [
                (cost_update(d, a, &p).unwrap(), cost_update(d, a, &scaled).unwrap()),
                (cost_delete(d, a, rs, &p).unwrap(), cost_delete(d, a, rs, &scaled).unwrap()),
            ] {
                let scale = d / p.master_write_rate;
                if m1.abs() > 1e-9 * scale {
                    prop_assert_eq!(m1 > 0.0, m2 > 0.0);
                }
            }
        }

        #[test]
        fn crossover_separates_plans(p in params(), rs in 16.0..4096.0f64) {
            let a = crossover_update(&p).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
            if a > 1e-6 && a < 1.0 - 1e-6 {
                prop_assert!(cost_update(1e9, a * 0.999, &p).unwrap() > 0.0);
                prop_assert!(cost_update(1e9, (a * 1.001).min(1.0), &p).unwrap() < 0.0);
            }
            let b = crossover_delete(rs, &p).unwrap();
            prop_assert!((0.0..=1.0).contains(&b));
            if b > 1e-6 && b < 1.0 - 1e-6 {
                prop_assert!(cost_delete(1e9, b * 0.999, rs, &p).unwrap() > 0.0);
                prop_assert!(cost_delete(1e9, (b * 1.001).min(1.0), rs, &p).unwrap() < 0.0);
            }
        }
    }
}
