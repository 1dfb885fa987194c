use std::collections::BTreeMap;

use dualtable_core::cost::{cost_delete, cost_update, crossover_delete, crossover_update};
use dualtable_core::delta::DeltaOp;
use dualtable_core::journal::{encode_group, replay, JournalRecord};
use dualtable_core::{Column, ColumnType, CostParams, DeltaKind, RecordId, Schema, Value};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = CostParams> {
    (8.0..10.0f64, 8.0..10.0f64, 8.0..10.0f64, 8.0..10.0f64, 1u32..50).prop_map(|(wm, rm, wa, ra, k)| CostParams {
        master_write_rate: 10f64.powf(wm),
        master_read_rate: 10f64.powf(rm),
        attached_write_rate: 10f64.powf(wa),
        attached_read_rate: 10f64.powf(ra),
        successive_reads: k,
        marker_size: 9.0,
    })
}

/// Zero of a decreasing function on [0, 1] by bisection, clamped to the
/// interval like the closed forms.
fn bisect(f: impl Fn(f64) -> f64) -> f64 {
    if f(1.0) >= 0.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..100 {
        let mid = (lo + hi) / 2.0;
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / 2.0
}

proptest! {
    #[test]
    fn update_crossover_matches_bisection(p in params(), d in 1e6..1e12f64) {
        let numeric = bisect(|a| cost_update(d, a, &p).unwrap());
        let closed = crossover_update(&p).unwrap();
        prop_assert!((numeric - closed).abs() < 1e-9, "{numeric} vs {closed}");
    }

    #[test]
    fn delete_crossover_matches_bisection(p in params(), d in 1e6..1e12f64, row in 10.0..4000.0f64) {
        let numeric = bisect(|b| cost_delete(d, b, row, &p).unwrap());
        let closed = crossover_delete(row, &p).unwrap();
        prop_assert!((numeric - closed).abs() < 1e-9, "{numeric} vs {closed}");
    }
}

fn schema() -> Schema {
    Schema::new(vec![Column::new("a", ColumnType::Int64), Column::new("s", ColumnType::Utf8)]).unwrap()
}

fn op() -> impl Strategy<Value = DeltaOp> {
    let id = (0u64..40).prop_map(RecordId::from_packed);
    prop_oneof![
        id.clone().prop_map(|record_id| DeltaOp::Delete { record_id }),
        (id, any::<i64>(), proptest::option::of("[a-z]{0,6}")).prop_map(|(record_id, a, s)| {
            let mut cells = BTreeMap::new();
            cells.insert(0u16, Value::Int(a));
            if let Some(s) = s {
                cells.insert(1u16, Value::Str(s));
            }
            DeltaOp::Patch { record_id, cells }
        }),
    ]
}

/// Reference: a plain map where a delete wins over any later patch.
fn reference(groups: &[Vec<DeltaOp>]) -> BTreeMap<u64, Option<BTreeMap<u16, Value>>> {
    let mut m: BTreeMap<u64, Option<BTreeMap<u16, Value>>> = BTreeMap::new();
    for g in groups {
        let mut next = m.clone();
        let mut ok = true;
        for op in g {
            match op {
                DeltaOp::Delete { record_id } => {
                    next.insert(record_id.packed(), None);
                }
                DeltaOp::Patch { record_id, cells } => match next.entry(record_id.packed()).or_insert(Some(BTreeMap::new())) {
                    Some(existing) => existing.extend(cells.clone()),
                    None => ok = false,
                },
            }
        }
        if ok {
            m = next;
        }
    }
    m
}

proptest! {
    #[test]
    fn replay_of_every_prefix_is_a_committed_prefix(
        groups in proptest::collection::vec(proptest::collection::vec(op(), 1..5), 1..8),
    ) {
        let schema = schema();
        let mut buf = Vec::new();
        JournalRecord::Epoch { epoch: 3 }.encode(&mut buf);
        let mut accepted: Vec<Vec<DeltaOp>> = Vec::new();
        let mut ends = Vec::new();
        let mut state = dualtable_core::DeltaState::new();
        for (seq, g) in groups.iter().enumerate() {
            // The writer only journals batches the state accepts.
            if state.clone().apply_batch(g, &schema).is_err() {
                continue;
            }
            state.apply_batch(g, &schema).unwrap();
            encode_group(seq as u64, g, &mut buf);
            accepted.push(g.clone());
            ends.push(buf.len());
        }
        for cut in 0..=buf.len() {
            let r = replay(&buf[..cut], &schema);
            let whole = ends.iter().filter(|&&e| e <= cut).count();
            let want = reference(&accepted[..whole]);
            let got: BTreeMap<u64, Option<BTreeMap<u16, Value>>> = r
                .state
                .iter()
                .map(|e| {
                    let v = match &e.kind {
                        DeltaKind::Delete => None,
                        DeltaKind::Patch(c) => Some(c.clone()),
                    };
                    (e.record_id.packed(), v)
                })
                .collect();
            prop_assert_eq!(got, want, "cut {}", cut);
            prop_assert!(r.valid_len <= cut);
        }
    }
}
