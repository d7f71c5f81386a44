use std::time::Instant;

use rayon::prelude::*;

use super::chain::{ChainedWarp, Stage};
use super::pair::{build_stage, dims, estimate_pair, harmonize, ms, overlap_columns, stitch_pair, warp_diagnostics, PairEstimate};
use super::report::{PairReport, StitchOptions, StitchReport, Timings, WarpMode};
use super::Stitched;
use crate::compositing::{blend, canvas_bounds_multi, find_seam, place_reference, warp_image, Raster};
use crate::error::{Error, Result};
use crate::estimation::{detect_and_match, CorrespondenceSet, MatchOptions};
use crate::warp::Warp;

/// Default reference: the middle image.
pub fn default_reference(count: usize) -> usize {
    count.saturating_sub(1) / 2
}

struct PairPlan {
    target: usize,
    reference: usize,
    est: PairEstimate,
    stage: Stage,
    fallback: bool,
    x_star: f64,
    overlap: (i64, i64),
}

/// Pair `k` links images `k` and `k + 1`; `corrs[k]` maps points of image
/// `k` (source) to image `k + 1` (dest). Each pair is warped toward the
/// reference, and each image's warp is the chain of pair stages leading to
/// the reference.
pub fn stitch_sequence(
    images: &[Raster],
    corrs: &[Option<CorrespondenceSet>],
    ref_index: usize,
    opts: &StitchOptions,
) -> Result<Stitched> {
    opts.validate()?;
    let n = images.len();
    if n < 2 {
        return Err(Error::InvalidInput("a sequence needs at least two images".into()));
    }
    if corrs.len() != n - 1 {
        return Err(Error::InvalidInput(format!(
            "{} images need {} correspondence sets, got {}",
            n,
            n - 1,
            corrs.len()
        )));
    }
    if ref_index >= n {
        return Err(Error::InvalidInput(format!("reference index {ref_index} out of range")));
    }
    if n == 2 {
        return stitch_two(images, corrs, ref_index, opts);
    }

    let start = Instant::now();
    let mut timings = Timings::default();
    let refs: Vec<&Raster> = images.iter().collect();
    let images = harmonize(&refs);

    let t = Instant::now();
    let plans: Vec<PairPlan> = (0..n - 1)
        .into_par_iter()
        .map(|k| {
            let (target, reference) = if k >= ref_index { (k + 1, k) } else { (k, k + 1) };
            plan_pair(&images[target], &images[reference], corrs[k].as_ref(), k >= ref_index, opts)
                .map(|(est, stage, fallback, x_star, overlap)| PairPlan {
                    target,
                    reference,
                    est,
                    stage,
                    fallback,
                    x_star,
                    overlap,
                })
                .map_err(|e| Error::ChainBreak {
                    pair: k,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;
    timings.estimation_ms = ms(t);

    // Chains toward the reference, one per non-reference image.
    let chain_of = |i: usize| -> Result<ChainedWarp> {
        let stages = if i > ref_index {
            (ref_index..i).rev().map(|k| plans[k].stage.clone()).collect()
        } else {
            (i..ref_index).map(|k| plans[k].stage.clone()).collect()
        };
        ChainedWarp::new(stages)
    };
    // Composition order: rightward from the reference, then leftward.
    let order: Vec<usize> = (ref_index + 1..n).chain((0..ref_index).rev()).collect();
    let chains: Vec<ChainedWarp> = order.iter().map(|&i| chain_of(i)).collect::<Result<_>>()?;

    let t = Instant::now();
    let bounds: Vec<(&dyn Warp, (usize, usize))> = order
        .iter()
        .zip(&chains)
        .map(|(&i, c)| (c as &dyn Warp, dims(&images[i])))
        .collect();
    let frame = canvas_bounds_multi(&bounds, dims(&images[ref_index]), opts.canvas_cap)?;
    timings.warp_map_ms = ms(t);

    let t = Instant::now();
    let ref_canvas = place_reference(&images[ref_index], frame);
    let warped: Vec<Raster> = order
        .par_iter()
        .zip(&chains)
        .map(|(&i, c)| warp_image(c, &images[i], frame))
        .collect();
    timings.resample_ms = ms(t);

    // Labels: 0 is the reference, other images are numbered 1.. in input order.
    let label_of = |i: usize| if i < ref_index { i as i32 + 1 } else { i as i32 };
    let mut layers: Vec<&Raster> = vec![&ref_canvas; n];
    for (&i, w) in order.iter().zip(&warped) {
        layers[label_of(i) as usize] = w;
    }

    let t = Instant::now();
    let mut labels: Vec<i32> = ref_canvas.valid.iter().map(|&v| if v { 0 } else { -1 }).collect();
    let mut composite = ref_canvas.clone();
    let mut seam_costs = vec![0.0; n - 1];
    for (&i, w) in order.iter().zip(&warped) {
        let overlap: Vec<bool> = composite.valid.iter().zip(&w.valid).map(|(&a, &b)| a && b).collect();
        let cut = if overlap.iter().any(|&o| o) { Some(find_seam(&composite, w, &overlap)?) } else { None };
        let pair = if i > ref_index { i - 1 } else { i };
        seam_costs[pair] = cut.as_ref().map_or(0.0, |c| c.cost);
        let ch = composite.channels;
        for p in 0..labels.len() {
            let take = match (&cut, composite.valid[p], w.valid[p]) {
                (_, false, true) => true,
                (Some(c), true, true) => !c.from_a[p],
                _ => false,
            };
            if take {
                labels[p] = label_of(i);
                composite.valid[p] = true;
                composite.data[p * ch..(p + 1) * ch].copy_from_slice(&w.data[p * ch..(p + 1) * ch]);
            }
        }
    }
    timings.seam_ms = ms(t);

    let t = Instant::now();
    let mosaic = blend(&layers, &labels, opts.feather_px)?;
    timings.blend_ms = ms(t);

    let pairs = plans
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let (non_overlap_metrics, scale_profile) =
                warp_diagnostics(&p.stage, &p.est, p.x_star, dims(&images[p.target]));
            PairReport {
                pair: k,
                target: p.target,
                reference: p.reference,
                homography: p.est.h0.params(),
                warp: if p.stage.quasi_map().is_some() { WarpMode::Quasi } else { WarpMode::Homography },
                fallback: p.fallback,
                mirrored: p.est.mirror.is_some(),
                x_star: p.x_star,
                x_star_initial: p.x_star,
                y_star: p.est.working.horizon_row().ok(),
                overlap_columns: [p.overlap.0, p.overlap.1],
                correspondences: p.est.correspondences,
                inliers: p.est.inliers,
                inlier_rms: p.est.rms,
                ransac_iterations: p.est.iterations,
                seam_cost: seam_costs[k],
                non_overlap_metrics,
                scale_profile,
            }
        })
        .collect();
    timings.total_ms = ms(start);
    Ok(Stitched {
        mosaic,
        frame,
        report: StitchReport {
            mode: opts.mode,
            reference_index: ref_index,
            pairs,
            timings: Some(timings),
            config: None,
        },
    })
}

type Planned = (PairEstimate, Stage, bool, f64, (i64, i64));

/// Estimation and stage construction for one adjacent pair. `reversed`
/// flips the stored correspondences so they run target → reference.
fn plan_pair(
    target: &Raster,
    reference: &Raster,
    corrs: Option<&CorrespondenceSet>,
    reversed: bool,
    opts: &StitchOptions,
) -> Result<Planned> {
    let owned;
    let corrs = match corrs {
        Some(c) if reversed => {
            owned = c.reversed();
            &owned
        }
        Some(c) => c,
        None => {
            owned = detect_and_match(target, reference, &MatchOptions::default())?;
            &owned
        }
    };
    let est = estimate_pair(dims(target), dims(reference), corrs, opts)?;
    // Each stage's partition sits at that pair's overlap boundary in the
    // stage's own source frame.
    let overlap = overlap_columns(&est, dims(target), dims(reference))?;
    let x_star = (overlap.1 + 1) as f64;
    let (stage, fallback) = build_stage(&est, x_star, opts)?;
    Ok((est, stage, fallback, x_star, overlap))
}

/// Two images reduce to a single pair with the roles fixed by `ref_index`.
fn stitch_two(images: &[Raster], corrs: &[Option<CorrespondenceSet>], ref_index: usize, opts: &StitchOptions) -> Result<Stitched> {
    let (target, reference) = if ref_index == 0 { (1, 0) } else { (0, 1) };
    let c = corrs[0].as_ref().map(|c| if ref_index == 0 { c.reversed() } else { c.clone() });
    let mut out = stitch_pair(&images[target], &images[reference], c.as_ref(), opts).map_err(|e| match e {
        Error::InvalidInput(_) => e,
        other => Error::ChainBreak {
            pair: 0,
            source: Box::new(other),
        },
    })?;
    out.report.reference_index = ref_index;
    for p in &mut out.report.pairs {
        p.target = target;
        p.reference = reference;
    }
    Ok(out)
}
