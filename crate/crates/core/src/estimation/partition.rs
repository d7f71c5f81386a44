use crate::error::{Error, Result};

/// Moves the partition column to just outside the seam's rightmost extent.
///
/// The result is `max(seam) + 1`, clamped to `[min(seam), overlap_max_x + 1]`
/// so it never leaves the overlap's outer boundary.
pub fn refine_partition(seam_columns: &[i64], overlap_max_x: i64) -> Result<f64> {
    let (&lo, &hi) = match (seam_columns.iter().min(), seam_columns.iter().max()) {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => return Err(Error::EmptySeam),
    };
    let upper = (overlap_max_x + 1).max(lo);
    Ok((hi + 1).clamp(lo, upper) as f64)
}
