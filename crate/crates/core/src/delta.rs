//! Delta entries and the visible state of an attached store.
//!
//! Each record id has at most one visible entry. A patch maps column
//! ordinals to new values; later patches on the same record override earlier
//! ones column by column. A delete marker replaces whatever was there and a
//! deleted record cannot be patched again.

use alloc::collections::btree_map::{self, BTreeMap};
use alloc::vec::Vec;
use core::ops::Bound;

use crate::error::{CoreError, Result};
use crate::record_id::RecordId;
use crate::value::{Schema, Value};

/// Bytes of the record id key in every entry.
pub const KEY_SIZE: u64 = 8;
/// Bytes of the kind tag that marks a deletion.
pub const TAG_SIZE: u64 = 1;
/// Logical size of a delete marker (`m` in the delete cost model).
pub const MARKER_SIZE: u64 = KEY_SIZE + TAG_SIZE;

/// Logical size of one patched cell: `u16` ordinal, `u32` length, payload.
pub fn cell_size(value: &Value) -> u64 {
    2 + 4 + value.payload_len() as u64
}

/// Logical size of a patch entry carrying the given cells.
pub fn patch_size<'a>(cells: impl IntoIterator<Item = &'a Value>) -> u64 {
    KEY_SIZE + cells.into_iter().map(cell_size).sum::<u64>()
}

#[derive(Debug, Clone, PartialEq)]
pub enum DeltaKind {
    Patch(BTreeMap<u16, Value>),
    Delete,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaEntry {
    pub record_id: RecordId,
    pub kind: DeltaKind,
}

impl DeltaEntry {
    pub fn is_delete(&self) -> bool {
        matches!(self.kind, DeltaKind::Delete)
    }

    pub fn logical_size(&self) -> u64 {
        match &self.kind {
            DeltaKind::Delete => MARKER_SIZE,
            DeltaKind::Patch(cells) => patch_size(cells.values()),
        }
    }
}

/// One modification as issued by a writer.
#[derive(Debug, Clone, PartialEq)]
pub enum DeltaOp {
    Patch {
        record_id: RecordId,
        cells: BTreeMap<u16, Value>,
    },
    Delete {
        record_id: RecordId,
    },
}

impl DeltaOp {
    pub fn record_id(&self) -> RecordId {
        match self {
            DeltaOp::Patch { record_id, .. } | DeltaOp::Delete { record_id } => *record_id,
        }
    }

    /// Logical bytes this operation writes.
    pub fn written_size(&self) -> u64 {
        match self {
            DeltaOp::Delete { .. } => MARKER_SIZE,
            DeltaOp::Patch { cells, .. } => patch_size(cells.values()),
        }
    }
}

/// Validates the cells of a patch against a schema.
pub fn check_patch(cells: &BTreeMap<u16, Value>, schema: &Schema) -> Result<()> {
    if cells.is_empty() {
        return Err(CoreError::EmptyPatch);
    }
    for (&ordinal, value) in cells {
        let column = schema
            .column(usize::from(ordinal))
            .ok_or(CoreError::InvalidOrdinal(ordinal))?;
        if !value.conforms_to(column.ty) {
            return Err(CoreError::TypeMismatch {
                column: column.name.clone(),
                expected: column.ty,
                found: value.type_name(),
            });
        }
    }
    Ok(())
}

/// Applies `op` on top of `current`, returning the new visible entry, or
/// `None` when the operation changes nothing (a repeated delete).
pub fn fold(current: Option<&DeltaEntry>, op: &DeltaOp) -> Result<Option<DeltaEntry>> {
    match (current.map(|e| &e.kind), op) {
        (Some(DeltaKind::Delete), DeltaOp::Delete { .. }) => Ok(None),
        (_, DeltaOp::Delete { record_id }) => Ok(Some(DeltaEntry {
            record_id: *record_id,
            kind: DeltaKind::Delete,
        })),
        (Some(DeltaKind::Delete), DeltaOp::Patch { record_id, .. }) => {
            Err(CoreError::PatchOnDeleted(*record_id))
        }
        (Some(DeltaKind::Patch(old)), DeltaOp::Patch { record_id, cells }) => {
            let mut merged = old.clone();
            merged.extend(cells.iter().map(|(k, v)| (*k, v.clone())));
            Ok(Some(DeltaEntry {
                record_id: *record_id,
                kind: DeltaKind::Patch(merged),
            }))
        }
        (None, DeltaOp::Patch { record_id, cells }) => Ok(Some(DeltaEntry {
            record_id: *record_id,
            kind: DeltaKind::Patch(cells.clone()),
        })),
    }
}

/// Latest visible delta per record id, iterable in ascending id order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeltaState {
    entries: BTreeMap<RecordId, DeltaEntry>,
    size_bytes: u64,
}

impl DeltaState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of the logical sizes of all visible entries.
    pub fn size_bytes(&self) -> u64 {
        self.size_bytes
    }

    pub fn get(&self, id: RecordId) -> Option<&DeltaEntry> {
        self.entries.get(&id)
    }

    /// Checks `op` without applying it.
    pub fn check(&self, op: &DeltaOp, schema: &Schema) -> Result<()> {
        if let DeltaOp::Patch { cells, .. } = op {
            check_patch(cells, schema)?;
        }
        fold(self.get(op.record_id()), op).map(|_| ())
    }

    /// Applies one operation. Returns the logical bytes written, which is
    /// zero for a no-op.
    pub fn apply(&mut self, op: &DeltaOp, schema: &Schema) -> Result<u64> {
        if let DeltaOp::Patch { cells, .. } = op {
            check_patch(cells, schema)?;
        }
        let id = op.record_id();
        let Some(next) = fold(self.entries.get(&id), op)? else {
            return Ok(0);
        };
        let new_size = next.logical_size();
        if let Some(old) = self.entries.insert(id, next) {
            self.size_bytes -= old.logical_size();
        }
        self.size_bytes += new_size;
        Ok(op.written_size())
    }

    /// Validates every operation against the state as it would be after the
    /// preceding ones, without applying anything.
    pub fn check_batch(&self, ops: &[DeltaOp], schema: &Schema) -> Result<()> {
        let mut staged: BTreeMap<RecordId, DeltaEntry> = BTreeMap::new();
        for op in ops {
            if let DeltaOp::Patch { cells, .. } = op {
                check_patch(cells, schema)?;
            }
            let id = op.record_id();
            let current = staged.get(&id).or_else(|| self.entries.get(&id));
            if let Some(next) = fold(current, op)? {
                staged.insert(id, next);
            }
        }
        Ok(())
    }

    /// Applies a batch validated by [`DeltaState::check_batch`]. Nothing
    /// changes on error.
    pub fn apply_batch(&mut self, ops: &[DeltaOp], schema: &Schema) -> Result<u64> {
        self.check_batch(ops, schema)?;
        let mut written = 0;
        for op in ops {
            written += self.apply(op, schema)?;
        }
        Ok(written)
    }

    pub fn clear(&mut self) {
        self.entries.clear();
        self.size_bytes = 0;
    }

    pub fn iter(&self) -> btree_map::Values<'_, RecordId, DeltaEntry> {
        self.entries.values()
    }

    /// Entries with ids in `[lo, hi)`; `hi = None` means unbounded.
    pub fn range(
        &self,
        lo: RecordId,
        hi: Option<RecordId>,
    ) -> impl Iterator<Item = &DeltaEntry> + '_ {
        let upper = hi.map_or(Bound::Unbounded, Bound::Excluded);
        let empty = hi.is_some_and(|h| h <= lo);
        let range = if empty {
            self.entries.range(lo..lo)
        } else {
            self.entries.range((Bound::Included(lo), upper))
        };
        range.map(|(_, e)| e)
    }

    pub fn into_entries(self) -> Vec<DeltaEntry> {
        self.entries.into_values().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::{Column, ColumnType};
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    fn schema() -> Schema {
        Schema::new(vec![
            Column::new("a", ColumnType::Int64),
            Column::new("b", ColumnType::Int64),
            Column::new("c", ColumnType::Utf8),
            Column::new("d", ColumnType::Int64),
        ])
        .unwrap()
    }

    fn patch(id: u64, cells: &[(u16, Value)]) -> DeltaOp {
        DeltaOp::Patch {
            record_id: RecordId::from_packed(id),
            cells: cells.iter().cloned().collect(),
        }
    }

    fn delete(id: u64) -> DeltaOp {
        DeltaOp::Delete {
            record_id: RecordId::from_packed(id),
        }
    }

    #[test]
    fn single_patch_is_visible() {
        let s = schema();
        let mut st = DeltaState::new();
        st.apply(&patch(1, &[(2, Value::Str("x".to_string()))]), &s)
            .unwrap();
        let e = st.get(RecordId::from_packed(1)).unwrap();
        assert_eq!(
            e.kind,
            DeltaKind::Patch([(2, Value::Str("x".to_string()))].into_iter().collect())
        );
    }

    #[test]
    fn patches_merge_columnwise() {
        let s = schema();
        let mut st = DeltaState::new();
        st.apply(&patch(1, &[(2, Value::Str("x".to_string()))]), &s)
            .unwrap();
        st.apply(&patch(1, &[(3, Value::Int(7))]), &s).unwrap();
        let e = st.get(RecordId::from_packed(1)).unwrap();
        let DeltaKind::Patch(cells) = &e.kind else {
            panic!()
        };
        assert_eq!(cells.len(), 2);
        assert_eq!(cells[&2], Value::Str("x".to_string()));
        assert_eq!(cells[&3], Value::Int(7));
        assert_eq!(st.size_bytes(), e.logical_size());
    }

    #[test]
    fn delete_marker_rules() {
        let s = schema();
        let mut st = DeltaState::new();
        assert_eq!(st.apply(&delete(4), &s).unwrap(), MARKER_SIZE);
        assert_eq!(st.apply(&delete(4), &s).unwrap(), 0);
        assert_eq!(st.size_bytes(), MARKER_SIZE);
        assert_eq!(st.len(), 1);

        st.apply(&patch(5, &[(0, Value::Int(1))]), &s).unwrap();
        st.apply(&delete(5), &s).unwrap();
        assert!(st.get(RecordId::from_packed(5)).unwrap().is_delete());
        assert_eq!(st.size_bytes(), 2 * MARKER_SIZE);

        let err = st.apply(&patch(5, &[(0, Value::Int(1))]), &s).unwrap_err();
        assert_eq!(err, CoreError::PatchOnDeleted(RecordId::from_packed(5)));
    }

    #[test]
    fn patch_validation() {
        let s = schema();
        let mut st = DeltaState::new();
        assert_eq!(st.apply(&patch(1, &[]), &s), Err(CoreError::EmptyPatch));
        assert_eq!(
            st.apply(&patch(1, &[(9, Value::Int(1))]), &s),
            Err(CoreError::InvalidOrdinal(9))
        );
        assert!(matches!(
            st.apply(&patch(1, &[(0, Value::Bool(true))]), &s),
            Err(CoreError::TypeMismatch { .. })
        ));
        assert!(st.is_empty());
    }

    #[test]
    fn range_semantics() {
        let s = schema();
        let mut st = DeltaState::new();
        for id in [1, 5, 9] {
            st.apply(&delete(id), &s).unwrap();
        }
        let ids: Vec<u64> = st
            .range(RecordId::from_packed(2), Some(RecordId::from_packed(9)))
            .map(|e| e.record_id.packed())
            .collect();
        assert_eq!(ids, vec![5]);
        assert_eq!(
            st.range(RecordId::from_packed(9), Some(RecordId::from_packed(2)))
                .count(),
            0
        );
        assert_eq!(st.range(RecordId::MIN, None).count(), 3);
    }

    #[test]
    fn marker_sizes_sum() {
        let s = schema();
        let mut st = DeltaState::new();
        for id in 0..100 {
            st.apply(&delete(id), &s).unwrap();
        }
        assert_eq!(st.size_bytes(), 100 * MARKER_SIZE);
    }

    fn arb_op() -> impl Strategy<Value = DeltaOp> {
        prop_oneof![
            3 => (0u64..4, proptest::collection::btree_map(0u16..4, 0i64..5, 1..3)).prop_map(|(id, cells)| {
                // column 2 is a string column
                let cells = cells.into_iter().map(|(k, v)| {
                    let v = if k == 2 { Value::Str(v.to_string()) } else { Value::Int(v) };
                    (k, v)
                }).collect();
                DeltaOp::Patch { record_id: RecordId::from_packed(id), cells }
            }),
            1 => (0u64..4).prop_map(|id| DeltaOp::Delete { record_id: RecordId::from_packed(id) }),
        ]
    }

    // Reference: per id, a delete wins forever, otherwise patches overlay.
    fn reference(ops: &[DeltaOp]) -> BTreeMap<u64, Option<BTreeMap<u16, Value>>> {
        let mut m: BTreeMap<u64, Option<BTreeMap<u16, Value>>> = BTreeMap::new();
        for op in ops {
            match op {
                DeltaOp::Delete { record_id } => {
                    m.insert(record_id.packed(), None);
                }
                DeltaOp::Patch { record_id, cells } => {
                    let slot = m.entry(record_id.packed()).or_insert_with(|| Some(BTreeMap::new()));
                    if let Some(cur) = slot {
                        cur.extend(cells.clone());
                    }
                }
            }
        }
        m
    }

    proptest! {
        #[test]
        fn supersession_matches_reference(ops in proptest::collection::vec(arb_op(), 0..40)) {
            let s = schema();
            let mut st = DeltaState::new();
            let mut accepted = Vec::new();
            for op in &ops {
                if st.apply(op, &s).is_ok() {
                    accepted.push(op.clone());
                } else {
                    let deleted = st.get(op.record_id()).is_some_and(DeltaEntry::is_delete);
                    prop_assert!(deleted);
                }
            }
            let expected = reference(&accepted);
            prop_assert_eq!(st.len(), expected.len());
            let mut size = 0;
            let mut prev = None;
            for e in st.iter() {
                prop_assert!(prev < Some(e.record_id));
                prev = Some(e.record_id);
                size += e.logical_size();
                match (&e.kind, &expected[&e.record_id.packed()]) {
                    (DeltaKind::Delete, None) => {}
                    (DeltaKind::Patch(c), Some(r)) => prop_assert_eq!(c, r),
                    _ => prop_assert!(false, "kind mismatch"),
                }
            }
            prop_assert_eq!(size, st.size_bytes());
        }
    }
}
