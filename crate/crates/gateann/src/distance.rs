//! Squared L2 distance kernels.
//!
//! All exact distances in this crate are squared L2: ordering is the same as
//! true L2 and the square root is never needed. For u8 elements the sum is
//! accumulated in integers, so the result is exact; f32 elements accumulate
//! in f64.

use crate::dataset::VectorRef;
use crate::error::{Error, Result};

/// Squared L2 distance between two vectors of equal dimension and dtype.
pub fn l2_sq(a: VectorRef<'_>, b: VectorRef<'_>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimMismatch(a.len(), b.len()));
    }
    match (a, b) {
        (VectorRef::U8(x), VectorRef::U8(y)) => Ok(l2_u8(x, y) as f64),
        (VectorRef::F32(x), VectorRef::F32(y)) => Ok(l2_f32(x, y)),
        _ => Err(Error::DtypeMismatch),
    }
}

/// Exact squared L2 for u8 slices (integer accumulation).
#[inline]
pub fn l2_u8(a: &[u8], b: &[u8]) -> u64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0u64;
    for (&x, &y) in a.iter().zip(b.iter()) {
        let d = x as i32 - y as i32;
        acc += (d * d) as u64;
    }
    acc
}

/// Squared L2 for f32 slices with f64 accumulation.
#[inline]
pub fn l2_f32(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0f64;
    for (&x, &y) in a.iter().zip(b.iter()) {
        let d = x as f64 - y as f64;
        acc += d * d;
    }
    acc
}

/// Fast f32-accumulated squared L2, used for PQ table construction and
/// k-means inner loops where f64 exactness is not required.
#[inline]
pub fn l2_f32_fast(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0f32;
    for (&x, &y) in a.iter().zip(b.iter()) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng64;
    use proptest::prelude::*;

    #[test]
    fn zero_distance_at_identity() {
        let a = VectorRef::U8(&[0, 0]);
        assert_eq!(l2_sq(a, a).unwrap(), 0.0);
    }

    #[test]
    fn three_four_five() {
        let a = VectorRef::F32(&[1.0, 2.0]);
        let b = VectorRef::F32(&[4.0, 6.0]);
        assert_eq!(l2_sq(a, b).unwrap(), 25.0);
        let a = VectorRef::U8(&[1, 2]);
        let b = VectorRef::U8(&[4, 6]);
        assert_eq!(l2_sq(a, b).unwrap(), 25.0);
    }

    #[test]
    fn matches_naive_loop_on_random_u8() {
        let mut rng = Rng64::new(2024);
        let a: Vec<u8> = (0..128).map(|_| rng.below(256) as u8).collect();
        let b: Vec<u8> = (0..128).map(|_| rng.below(256) as u8).collect();
        let mut expect = 0.0f64;
        for i in 0..128 {
            let d = a[i] as f64 - b[i] as f64;
            expect += d * d;
        }
        assert_eq!(l2_sq(VectorRef::U8(&a), VectorRef::U8(&b)).unwrap(), expect);
    }

    #[test]
    fn dim_and_dtype_mismatch() {
        let a = VectorRef::U8(&[1, 2, 3]);
        let b = VectorRef::U8(&[1, 2]);
        assert!(matches!(l2_sq(a, b), Err(crate::error::Error::DimMismatch(3, 2))));
        let c = VectorRef::F32(&[1.0, 2.0, 3.0]);
        assert!(matches!(l2_sq(a, c), Err(crate::error::Error::DtypeMismatch)));
    }

    proptest! {
        #[test]
        fn symmetric_and_zero_on_self(a in proptest::collection::vec(0u8..=255, 16),
                                      b in proptest::collection::vec(0u8..=255, 16)) {
            let ra = VectorRef::U8(&a);
            let rb = VectorRef::U8(&b);
            prop_assert_eq!(l2_sq(ra, rb).unwrap(), l2_sq(rb, ra).unwrap());
            prop_assert_eq!(l2_sq(ra, ra).unwrap(), 0.0);
        }

        #[test]
        fn symmetric_f32(a in proptest::collection::vec(-100.0f32..100.0, 8),
                         b in proptest::collection::vec(-100.0f32..100.0, 8)) {
            let ra = VectorRef::F32(&a);
            let rb = VectorRef::F32(&b);
            prop_assert_eq!(l2_sq(ra, rb).unwrap(), l2_sq(rb, ra).unwrap());
        }
    }
}
