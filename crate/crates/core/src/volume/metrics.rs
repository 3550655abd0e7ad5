//! Overlap metrics between binary masks.

use crate::error::Result;
use crate::volume::{Volume3, VolumeKind};

/// Dice score `2|A∩B| / (|A| + |B|)` between two masks of identical
/// geometry. Two empty masks score 1.0.
pub fn dice(a: &Volume3, b: &Volume3) -> Result<f64> {
    assert_eq!(a.kind(), VolumeKind::Mask, "dice requires mask volumes");
    assert_eq!(b.kind(), VolumeKind::Mask, "dice requires mask volumes");
    a.check_same_geometry(b, "dice operands")?;
    let mut inter = 0usize;
    let mut total = 0usize;
    for (&x, &y) in a.data().iter().zip(b.data()) {
        let (fx, fy) = (x != 0.0, y != 0.0);
        inter += (fx && fy) as usize;
        total += fx as usize + fy as usize;
    }
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    const SP: (f64, f64, f64) = (1.0, 1.0, 1.0);

    fn mask(dims: (usize, usize, usize), on: &[usize]) -> Volume3 {
        let mut bits = vec![false; dims.0 * dims.1 * dims.2];
        for &i in on {
            bits[i] = true;
        }
        Volume3::mask_from_bits(dims, SP, &bits)
    }

    #[test]
    fn identical_nonempty_masks_score_one() {
        let a = mask((3, 3, 3), &[0, 5, 13]);
        assert_eq!(dice(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn disjoint_masks_score_zero() {
        let a = mask((3, 3, 3), &[0, 1]);
        let b = mask((3, 3, 3), &[10, 11]);
        assert_eq!(dice(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn half_overlap_scores_half() {
        let a = mask((2, 2, 2), &[0, 1, 2, 3]);
        let b = mask((2, 2, 2), &[2, 3, 4, 5]);
        assert_eq!(dice(&a, &b).unwrap(), 0.5);
    }

    #[test]
    fn both_empty_score_one() {
        let a = mask((2, 2, 2), &[]);
        assert_eq!(dice(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn geometry_mismatch_is_an_error() {
        let a = mask((2, 2, 2), &[]);
        let b = mask((2, 2, 3), &[]);
        assert!(matches!(dice(&a, &b), Err(Error::GeometryMismatch(_))));
    }
}
