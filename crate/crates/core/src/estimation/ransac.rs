use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::correspondence::{Correspondence, CorrespondenceSet};
use super::dlt::{dlt_items, minimal_sample_degenerate};
use crate::error::{Error, Result};
use crate::geometry::Homography;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RansacParams {
    pub inlier_threshold_px: f64,
    pub max_iterations: usize,
    pub confidence: f64,
    pub seed: u64,
    /// Inliers required beyond the four sample points. Every minimal sample
    /// fits itself exactly, so consensus is only meaningful past that.
    pub min_support: usize,
}

impl Default for RansacParams {
    fn default() -> Self {
        RansacParams {
            inlier_threshold_px: 3.0,
            max_iterations: 2000,
            confidence: 0.995,
            seed: 0,
            min_support: 4,
        }
    }
}

impl RansacParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.inlier_threshold_px > 0.0) {
            return Err(Error::InvalidInput("inlier threshold must be positive".into()));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidInput("max_iterations must be at least 1".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidInput("confidence must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacResult {
    pub homography: Homography,
    pub inlier_mask: Vec<bool>,
    pub iterations: usize,
}

impl RansacResult {
    pub fn inlier_count(&self) -> usize {
        self.inlier_mask.iter().filter(|&&m| m).count()
    }
}

/// RMS of the forward and backward reprojection distances.
pub fn symmetric_transfer_error(h: &Homography, inv: &Homography, c: &Correspondence) -> f64 {
    let fwd = h.apply(c.source).map(|p| p.distance(c.dest));
    let bwd = inv.apply(c.dest).map(|p| p.distance(c.source));
    match (fwd, bwd) {
        (Ok(a), Ok(b)) => ((a * a + b * b) / 2.0).sqrt(),
        _ => f64::INFINITY,
    }
}

fn inlier_mask(h: &Homography, items: &[Correspondence], threshold: f64) -> Option<Vec<bool>> {
    let inv = h.invert().ok()?;
    Some(
        items
            .iter()
            .map(|c| symmetric_transfer_error(h, &inv, c) < threshold)
            .collect(),
    )
}

fn count(mask: &[bool]) -> usize {
    mask.iter().filter(|&&m| m).count()
}

fn select(items: &[Correspondence], mask: &[bool]) -> Vec<Correspondence> {
    items
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(c, _)| *c)
        .collect()
}

/// Iterations needed so an all-inlier sample is drawn with the given confidence.
fn required_iterations(inlier_ratio: f64, confidence: f64) -> usize {
    let w4 = inlier_ratio.powi(4);
    if w4 >= 1.0 {
        return 1;
    }
    if w4 <= 0.0 {
        return usize::MAX;
    }
    let n = (1.0 - confidence).ln() / (1.0 - w4).ln();
    if n.is_finite() {
        n.ceil().max(1.0) as usize
    } else {
        usize::MAX
    }
}

pub fn ransac(corrs: &CorrespondenceSet, params: &RansacParams) -> Result<RansacResult> {
    params.validate()?;
    let items = &corrs.items;
    let n = items.len();
    if n < 4 {
        return Err(Error::DegenerateConfiguration(format!(
            "{n} correspondences, need at least 4"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best: Option<Vec<bool>> = None;
    let mut best_count = 0usize;
    let mut needed = params.max_iterations;
    let mut iterations = 0usize;

    while iterations < needed.min(params.max_iterations) {
        iterations += 1;
        let mut idx = [0usize; 4];
        let mut k = 0;
        while k < 4 {
            let i = rng.random_range(0..n);
            if !idx[..k].contains(&i) {
                idx[k] = i;
                k += 1;
            }
        }
        let sample = idx.map(|i| items[i]);
        if minimal_sample_degenerate(&sample.map(|c| c.source))
            || minimal_sample_degenerate(&sample.map(|c| c.dest))
        {
            continue;
        }
        let Ok(h) = dlt_items(&sample) else { continue };
        let Some(mask) = inlier_mask(&h, items, params.inlier_threshold_px) else {
            continue;
        };
        let c = count(&mask);
        if c > best_count {
            best_count = c;
            best = Some(mask);
            needed = required_iterations(c as f64 / n as f64, params.confidence);
        }
    }

    let required = 4 + params.min_support;
    let Some(mut mask) = best.filter(|_| best_count >= required) else {
        return Err(Error::NoConsensus { inliers: best_count });
    };

    // Refit on the consensus set until the set stops changing.
    let mut model = dlt_items(&select(items, &mask))?;
    for _ in 0..10 {
        let Some(next) = inlier_mask(&model, items, params.inlier_threshold_px) else {
            break;
        };
        if next == mask || count(&next) < required {
            break;
        }
        let refit = match dlt_items(&select(items, &next)) {
            Ok(h) => h,
            Err(_) => break,
        };
        mask = next;
        model = refit;
    }
    let final_mask = inlier_mask(&model, items, params.inlier_threshold_px).unwrap_or(mask);
    if count(&final_mask) < required {
        return Err(Error::NoConsensus {
            inliers: count(&final_mask),
        });
    }
    Ok(RansacResult {
        homography: model,
        inlier_mask: final_mask,
        iterations,
    })
}

/// RMS of forward reprojection error over the masked correspondences.
pub fn inlier_rms(h: &Homography, corrs: &CorrespondenceSet, mask: &[bool]) -> f64 {
    let sel = select(&corrs.items, mask);
    if sel.is_empty() {
        return 0.0;
    }
    let acc: f64 = sel
        .iter()
        .map(|c| h.apply(c.source).map(|p| p.distance(c.dest).powi(2)).unwrap_or(f64::INFINITY))
        .sum();
    (acc / sel.len() as f64).sqrt()
}
