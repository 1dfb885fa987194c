//! Merge-on-read of a master row stream with a delta stream.
//!
//! Both inputs are ascending in record id. The merge walks them with two
//! pointers, holding at most one pending delta: a delete marker drops the
//! row, a patch overwrites the patched cells, and rows without a delta pass
//! through untouched.

use core::borrow::Borrow;
use core::iter::Peekable;

use crate::delta::{DeltaEntry, DeltaKind};
use crate::record_id::RecordId;
use crate::value::Row;

/// Overwrites the patched cells of `row`. Returns `None` for a delete.
pub fn apply_delta(mut row: Row, entry: &DeltaEntry) -> Option<Row> {
    match &entry.kind {
        DeltaKind::Delete => None,
        DeltaKind::Patch(cells) => {
            for (&ordinal, value) in cells {
                if let Some(slot) = row.get_mut(usize::from(ordinal)) {
                    *slot = value.clone();
                }
            }
            Some(row)
        }
    }
}

/// Iterator produced by [`union_merge`].
pub struct UnionMerge<M, D: Iterator> {
    master: M,
    deltas: Peekable<D>,
}

/// Merges an ascending master stream with an ascending delta stream.
///
/// Master errors are passed through. Deltas whose id has no master row are
/// skipped.
pub fn union_merge<M, D, E>(master: M, deltas: D) -> UnionMerge<M::IntoIter, D::IntoIter>
where
    M: IntoIterator<Item = Result<(RecordId, Row), E>>,
    D: IntoIterator,
    D::Item: Borrow<DeltaEntry>,
{
    UnionMerge {
        master: master.into_iter(),
        deltas: deltas.into_iter().peekable(),
    }
}

impl<M, D, E> Iterator for UnionMerge<M, D>
where
    M: Iterator<Item = Result<(RecordId, Row), E>>,
    D: Iterator,
    D::Item: Borrow<DeltaEntry>,
{
    type Item = Result<(RecordId, Row), E>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let (id, row) = match self.master.next()? {
                Ok(item) => item,
                Err(e) => return Some(Err(e)),
            };
            while self
                .deltas
                .next_if(|d| d.borrow().record_id < id)
                .is_some()
            {}
            match self.deltas.next_if(|d| d.borrow().record_id == id) {
                None => return Some(Ok((id, row))),
                Some(delta) => {
                    if let Some(row) = apply_delta(row, delta.borrow()) {
                        return Some(Ok((id, row)));
                    }
                }
            }
        }
    }
}
