//! Modification-ratio estimation from execution history.
//!
//! Statements are grouped by a key that ignores literals, options, case and
//! whitespace, so `DELETE FROM t WHERE day = '2014-01-01'` and the same
//! statement for another day share one history.

use alloc::boxed::Box;
use alloc::collections::VecDeque;
use alloc::string::ToString;
use core::hash::Hasher;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use crate::dml::{DmlOptions, Statement};
use crate::error::{CoreError, Result};
use crate::expr::{Assignment, Comparison, Expr, Predicate};
use crate::value::Value;

/// Samples kept per statement key.
pub const MAX_SAMPLES: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioHistory {
    pub key: u64,
    pub samples: VecDeque<f64>,
    pub ewma: f64,
}

impl RatioHistory {
    pub fn new(key: u64) -> Self {
        RatioHistory {
            key,
            samples: VecDeque::new(),
            ewma: 0.0,
        }
    }

    /// Appends a sample and folds it into the average with `weight` on the
    /// newest value. The first sample seeds the average.
    pub fn record(&mut self, observed: f64, weight: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&observed) {
            return Err(CoreError::InvalidRatio(observed));
        }
        if !(0.0..=1.0).contains(&weight) {
            return Err(CoreError::InvalidRatio(weight));
        }
        self.ewma = if self.samples.is_empty() {
            observed
        } else {
            (weight * observed + (1.0 - weight) * self.ewma).clamp(0.0, 1.0)
        };
        if self.samples.len() == MAX_SAMPLES {
            self.samples.pop_front();
        }
        self.samples.push_back(observed);
        Ok(())
    }
}

/// An explicit hint wins, then the history average, then `default`.
pub fn estimate_ratio(hint: Option<f64>, history: Option<&RatioHistory>, default: f64) -> Result<f64> {
    if let Some(h) = hint {
        return if (0.0..=1.0).contains(&h) {
            Ok(h)
        } else {
            Err(CoreError::InvalidRatio(h))
        };
    }
    match history {
        Some(h) if !h.samples.is_empty() => Ok(h.ewma.clamp(0.0, 1.0)),
        _ if (0.0..=1.0).contains(&default) => Ok(default),
        _ => Err(CoreError::InvalidRatio(default)),
    }
}

fn mask_expr(e: &Expr) -> Expr {
    match e {
        Expr::Column(c) => Expr::Column(c.clone()),
        Expr::Literal(_) => Expr::Column("?".to_string()),
        Expr::Neg(inner) => Expr::Neg(Box::new(mask_expr(inner))),
        Expr::Binary { op, left, right } => Expr::binary(*op, mask_expr(left), mask_expr(right)),
    }
}

fn mask_predicate(p: &Option<Predicate>) -> Option<Predicate> {
    p.as_ref().map(|p| Predicate {
        any: p
            .any
            .iter()
            .map(|conj| {
                conj.iter()
                    .map(|c| Comparison {
                        left: mask_expr(&c.left),
                        op: c.op,
                        right: mask_expr(&c.right),
                    })
                    .collect()
            })
            .collect(),
    })
}

/// Canonical statement text with every literal replaced by `?` and the
/// `WITH` options dropped.
pub fn normalize(stmt: &Statement) -> alloc::string::String {
    let masked = match stmt {
        Statement::Update {
            table,
            assignments,
            predicate,
            ..
        } => Statement::Update {
            table: table.clone(),
            assignments: assignments
                .iter()
                .map(|a| Assignment {
                    column: a.column.clone(),
                    value: mask_expr(&a.value),
                })
                .collect(),
            predicate: mask_predicate(predicate),
            options: DmlOptions::default(),
        },
        Statement::Delete {
            table, predicate, ..
        } => Statement::Delete {
            table: table.clone(),
            predicate: mask_predicate(predicate),
            options: DmlOptions::default(),
        },
        Statement::Select {
            table,
            columns,
            predicate,
        } => Statement::Select {
            table: table.clone(),
            columns: columns.clone(),
            predicate: mask_predicate(predicate),
        },
        Statement::Insert { table, rows } => Statement::Insert {
            table: table.clone(),
            rows: alloc::vec![alloc::vec![Value::Null; rows.first().map_or(0, |r| r.len())]],
        },
        Statement::Load { table, .. } => Statement::Load {
            table: table.clone(),
            path: "?".to_string(),
        },
        other => other.clone(),
    };
    masked.to_string().to_lowercase()
}

/// FNV-1a hash of [`normalize`].
pub fn statement_key(stmt: &Statement) -> u64 {
    let mut h = FnvHasher::default();
    h.write(normalize(stmt).as_bytes());
    h.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dml::parse;
    use proptest::prelude::*;

    #[test]
    fn hint_dominates() {
        let mut h = RatioHistory::new(1);
        h.record(0.9, 0.5).unwrap();
        assert_eq!(estimate_ratio(Some(0.01), Some(&h), 0.05).unwrap(), 0.01);
        assert!(estimate_ratio(Some(1.5), Some(&h), 0.05).is_err());
    }

    #[test]
    fn fallback_to_default() {
        assert_eq!(estimate_ratio(None, None, 0.05).unwrap(), 0.05);
        let empty = RatioHistory::new(1);
        assert_eq!(estimate_ratio(None, Some(&empty), 0.05).unwrap(), 0.05);
    }

    #[test]
    fn two_sample_average() {
        let mut h = RatioHistory::new(1);
        h.record(0.02, 0.5).unwrap();
        h.record(0.04, 0.5).unwrap();
        assert!((estimate_ratio(None, Some(&h), 0.05).unwrap() - 0.03).abs() < 1e-15);
    }

    #[test]
    fn first_sample_seeds_and_zero_is_fixed_point() {
        let mut h = RatioHistory::new(1);
        h.record(0.2, 0.5).unwrap();
        assert_eq!(h.ewma, 0.2);
        for _ in 0..200 {
            h.record(0.0, 0.5).unwrap();
        }
        assert!(h.ewma < 1e-30);
        assert_eq!(h.samples.len(), MAX_SAMPLES);
    }

    #[test]
    fn alternating_matches_direct_recurrence() {
        let mut h = RatioHistory::new(1);
        let mut direct: Option<f64> = None;
        for i in 0..20 {
            let x = f64::from(i % 2);
            h.record(x, 0.5).unwrap();
            direct = Some(match direct {
                None => x,
                Some(e) => 0.5 * x + 0.5 * e,
            });
            assert_eq!(h.ewma, direct.unwrap());
        }
        // After a 1 the average approaches 2/3, after a 0 it approaches 1/3.
        assert!((h.ewma - 2.0 / 3.0).abs() < 1e-5);
        h.record(0.0, 0.5).unwrap();
        assert!((h.ewma - 1.0 / 3.0).abs() < 1e-5);
    }

    #[test]
    fn rejects_out_of_range() {
        let mut h = RatioHistory::new(1);
        assert!(h.record(-0.1, 0.5).is_err());
        assert!(h.record(f64::NAN, 0.5).is_err());
        assert!(h.samples.is_empty());
    }

    #[test]
    fn keys_ignore_literals_case_and_options() {
        let a = parse("DELETE FROM t WHERE rq = '2014-01-01'").unwrap();
        let b = parse("delete   from T where RQ = '2015-06-30' WITH RATIO = 0.2").unwrap();
        let c = parse("DELETE FROM t WHERE rq = -5").unwrap();
        let d = parse("DELETE FROM t WHERE rq > '2014-01-01'").unwrap();
        assert_eq!(statement_key(&a), statement_key(&b));
        assert_eq!(statement_key(&a), statement_key(&c));
        assert_ne!(statement_key(&a), statement_key(&d));
        assert_eq!(normalize(&a), "delete from t where rq = ?");
        let u = parse("UPDATE t SET a = a + 1 WHERE b < 10 WITH K = 3").unwrap();
        assert_eq!(normalize(&u), "update t set a = a + ? where b < ?");
    }

    proptest! {
        #[test]
        fn estimate_in_unit_interval(
            samples in proptest::collection::vec(0.0..=1.0f64, 0..100),
            w in 0.0..=1.0f64,
            default in 0.0..=1.0f64,
        ) {
            let mut h = RatioHistory::new(7);
            for s in samples {
                h.record(s, w).unwrap();
                prop_assert!(h.samples.len() <= MAX_SAMPLES);
            }
            let r = estimate_ratio(None, Some(&h), default).unwrap();
            prop_assert!((0.0..=1.0).contains(&r));
        }
    }
}
