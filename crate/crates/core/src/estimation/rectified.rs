//! Homography estimation constrained so the target's outer vertical border
//! `x = w` stays vertical: `f0(w, 0) = f0(w, h)`, equivalently
//! `h8 (h1 w + h3) = h2 (h7 w + h9)`.
//!
//! The constraint is bilinear. Freezing `k = (h7 w + h9) / (h1 w + h3)`
//! makes it linear (`h8 = k h2`), so each step is an ordinary unit-norm
//! least-squares problem on eight unknowns. `k` is refreshed from the new
//! solution until it stops moving, and the last iterate is projected onto
//! the constraint exactly.

use nalgebra::DMatrix;

use super::correspondence::{Correspondence, CorrespondenceSet};
use super::dlt::{smallest_right_singular, NormalizedProblem};
use super::ransac::{ransac, RansacParams};
use crate::error::{Error, Result};
use crate::geometry::{Homography, Point};

const MAX_ITERATIONS: usize = 50;
const FIXED_POINT_TOL: f64 = 1e-10;
const FEASIBILITY_TOL: f64 = 1e-10;

pub fn estimate_rectified(
    corrs: &CorrespondenceSet,
    width: f64,
    height: f64,
    params: &RansacParams,
) -> Result<Homography> {
    let r = ransac(corrs, params)?;
    rectify_consensus(corrs, &r.inlier_mask, width, height)
}

/// Constrained refit on the correspondences selected by `mask`.
pub fn rectify_consensus(corrs: &CorrespondenceSet, mask: &[bool], width: f64, height: f64) -> Result<Homography> {
    let inliers: Vec<Correspondence> = corrs
        .items
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(c, _)| *c)
        .collect();
    let h = rectified_fit(&inliers, width)?;
    let violation = border_violation(&h, width, height)?;
    if !(violation < 1e-6) {
        return Err(Error::ConstraintInfeasible(format!(
            "border still tilts by {violation:e} px"
        )));
    }
    Ok(h)
}

/// Vertical-border violation `|f0(w, 0) - f0(w, h)|` in pixels.
pub fn border_violation(h: &Homography, width: f64, height: f64) -> Result<f64> {
    let top = h.apply(Point::new(width, 0.0))?;
    let bottom = h.apply(Point::new(width, height))?;
    Ok((top.x - bottom.x).abs())
}

pub(crate) fn rectified_fit(items: &[Correspondence], width: f64) -> Result<Homography> {
    if items.len() < 4 {
        return Err(Error::DegenerateConfiguration(format!(
            "{} correspondences, need at least 4",
            items.len()
        )));
    }
    let problem = NormalizedProblem::new(items);
    let w = problem.src.s * (width - problem.src.cx);
    let a = &problem.a;

    let (h0, _) = smallest_right_singular(a)?;
    let mut h: [f64; 9] = h0.try_into().expect("nine entries");
    let mut k = ratio(&h, w)?;

    for _ in 0..MAX_ITERATIONS {
        let scale = (1.0 + k * k).sqrt();
        // Columns: h1, h2' (= h2 * scale), h3..h7, h9.
        let reduced = DMatrix::from_fn(a.nrows(), 8, |i, j| match j {
            0 => a[(i, 0)],
            1 => (a[(i, 1)] + k * a[(i, 7)]) / scale,
            7 => a[(i, 8)],
            j => a[(i, j)],
        });
        let (g, _) = smallest_right_singular(&reduced)?;
        let h2 = g[1] / scale;
        h = [g[0], h2, g[2], g[3], g[4], g[5], g[6], k * h2, g[7]];
        let next = ratio(&h, w)?;
        let moved = (next - k).abs();
        k = next;
        if moved <= FIXED_POINT_TOL * (1.0 + k.abs()) {
            break;
        }
    }
    // Exact projection onto the constraint with the final coefficients.
    h[7] = h[1] * ratio(&h, w)?;

    let est = problem.denormalize(&h)?;
    let [h1, _, h3, ..] = est.params();
    if !((h1 * width + h3).abs() > FEASIBILITY_TOL * (h1.abs() * width.abs() + h3.abs())) {
        return Err(Error::ConstraintInfeasible("h1·w + h3 vanishes".into()));
    }
    Ok(est)
}

fn ratio(h: &[f64; 9], w: f64) -> Result<f64> {
    let den = h[0] * w + h[2];
    let norm = h.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(den.abs() > FEASIBILITY_TOL * norm) {
        return Err(Error::ConstraintInfeasible("h1·w + h3 vanishes".into()));
    }
    Ok((h[6] * w + h[8]) / den)
}
