//! Composite record identity.
//!
//! A record id is the file id of the master segment holding the row in the
//! high 32 bits and the row's position inside that segment in the low 32
//! bits. Row numbers are never stored: they are the row's ordinal within the
//! segment, recomputed on every scan. Ordering on the packed value is the
//! lexicographic order on `(file_id, row_number)`, which is what lets the
//! master scan and the delta scan be merged with two pointers.

use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RecordId(u64);

impl RecordId {
    pub const MIN: RecordId = RecordId(0);
    pub const MAX: RecordId = RecordId(u64::MAX);

    pub const fn new(file_id: u32, row_number: u32) -> Self {
        RecordId(((file_id as u64) << 32) | row_number as u64)
    }

    /// Checked constructor for components that arrive as wider integers.
    pub fn try_new(file_id: u64, row_number: u64) -> Result<Self> {
        match (u32::try_from(file_id), u32::try_from(row_number)) {
            (Ok(f), Ok(r)) => Ok(Self::new(f, r)),
            _ => Err(CoreError::RecordIdOverflow {
                file_id,
                row_number,
            }),
        }
    }

    pub const fn from_packed(packed: u64) -> Self {
        RecordId(packed)
    }

    pub const fn packed(self) -> u64 {
        self.0
    }

    pub const fn file_id(self) -> u32 {
        (self.0 >> 32) as u32
    }

    pub const fn row_number(self) -> u32 {
        self.0 as u32
    }

    pub const fn to_be_bytes(self) -> [u8; 8] {
        self.0.to_be_bytes()
    }

    pub const fn from_be_bytes(bytes: [u8; 8]) -> Self {
        RecordId(u64::from_be_bytes(bytes))
    }

    /// Half-open id range `[lo, hi)` covering every row of one segment.
    /// The upper bound is `None` for the last possible file id.
    pub fn file_range(file_id: u32) -> (RecordId, Option<RecordId>) {
        let lo = RecordId::new(file_id, 0);
        let hi = file_id.checked_add(1).map(|f| RecordId::new(f, 0));
        (lo, hi)
    }
}

impl fmt::Debug for RecordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RecordId({}:{})", self.file_id(), self.row_number())
    }
}

impl fmt::Display for RecordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file_id(), self.row_number())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn packing_layout() {
        assert_eq!(RecordId::new(1, 0).packed(), 0x0000_0001_0000_0000);
        assert_eq!(RecordId::new(0, 0).packed(), 0);
        assert_eq!(RecordId::new(0, 1).packed(), 1);
        assert_eq!(
            RecordId::new(u32::MAX, u32::MAX).packed(),
            u64::MAX
        );
    }

    #[test]
    fn overflow_is_rejected() {
        assert!(RecordId::try_new(1 << 32, 0).is_err());
        assert!(RecordId::try_new(0, 1 << 32).is_err());
        assert_eq!(
            RecordId::try_new(7, 9).unwrap(),
            RecordId::new(7, 9)
        );
    }

    #[test]
    fn file_range_bounds() {
        let (lo, hi) = RecordId::file_range(3);
        assert_eq!(lo, RecordId::new(3, 0));
        assert_eq!(hi, Some(RecordId::new(4, 0)));
        assert_eq!(RecordId::file_range(u32::MAX).1, None);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100_000))]

        #[test]
        fn pack_roundtrip(f in any::<u32>(), r in any::<u32>()) {
            let id = RecordId::new(f, r);
            prop_assert_eq!((id.file_id(), id.row_number()), (f, r));
            prop_assert_eq!(RecordId::from_be_bytes(id.to_be_bytes()), id);
        }
    }

    proptest! {
        #[test]
        fn order_is_lexicographic(a in any::<(u32, u32)>(), b in any::<(u32, u32)>()) {
            let x = RecordId::new(a.0, a.1);
            let y = RecordId::new(b.0, b.1);
            prop_assert_eq!(x.cmp(&y), a.cmp(&b));
        }
    }
}
