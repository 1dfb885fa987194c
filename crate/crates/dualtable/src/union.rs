//! Union read: the master scan merged with the attached deltas.
//!
//! A table is read one segment (partition) at a time. Each partition only
//! looks at deltas inside its own record id window, so partitions are
//! independent and can run on separate threads. Predicates are evaluated on
//! merged rows; projection happens last.

use dualtable_core::expr::BoundPredicate;
use dualtable_core::merge::union_merge;
use dualtable_core::{RecordId, Row, Schema};

use crate::attached::AttachedStore;
use crate::error::Result;
use crate::master::{MasterStore, RowStream, SegmentHandle};

/// Inputs shared by all partitions of one read.
#[derive(Clone, Copy)]
pub struct ReadContext<'a> {
    pub master: &'a MasterStore,
    pub attached: &'a AttachedStore,
    pub schema: &'a Schema,
    pub projection: Option<&'a [usize]>,
    pub predicate: Option<&'a BoundPredicate>,
}

/// Up-to-date rows of one segment.
pub fn union_read_partition<'a>(ctx: ReadContext<'a>, segment: &SegmentHandle) -> Result<RowStream<'a>> {
    let master = ctx.master.scan_segment(segment, ctx.schema, None)?;
    let (lo, hi) = segment.id_range();
    let merged = union_merge(master, ctx.attached.scan_deltas(lo, hi));
    Ok(Box::new(merged.filter_map(move |item| finish(ctx, item))))
}

fn finish(ctx: ReadContext<'_>, item: Result<(RecordId, Row)>) -> Option<Result<(RecordId, Row)>> {
    let (id, row) = match item {
        Ok(x) => x,
        Err(e) => return Some(Err(e)),
    };
    if let Some(p) = ctx.predicate {
        match p.matches(&row) {
            Ok(true) => {}
            Ok(false) => return None,
            Err(e) => return Some(Err(e.into())),
        }
    }
    Some(Ok((
        id,
        match ctx.projection {
            Some(cols) => row.project(cols),
            None => row,
        },
    )))
}

/// Up-to-date rows of the whole table in ascending record id order.
pub fn union_read<'a>(ctx: ReadContext<'a>, segments: &'a [SegmentHandle]) -> RowStream<'a> {
    Box::new(segments.iter().flat_map(move |s| match union_read_partition(ctx, s) {
        Ok(stream) => stream,
        Err(e) => Box::new(std::iter::once(Err(e))) as RowStream<'a>,
    }))
}

/// Runs every partition on its own thread and returns the rows in the same
/// order as [`union_read`].
pub fn union_read_parallel(ctx: ReadContext<'_>, segments: &[SegmentHandle]) -> Result<Vec<(RecordId, Row)>> {
    let parts: Vec<Result<Vec<_>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = segments
            .iter()
            .map(|s| scope.spawn(move || union_read_partition(ctx, s)?.collect::<Result<Vec<_>>>()))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("partition reader panicked"))
            .collect()
    });
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}
