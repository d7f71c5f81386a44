use std::borrow::Cow;
use std::time::Instant;

use rayon::prelude::*;

use super::chain::Stage;
use super::report::{PairReport, StitchOptions, StitchReport, Timings, WarpMode};
use super::Stitched;
use crate::compositing::{
    blend, canvas_bounds, find_seam_pinned, overlap_mask, pair_labels, place_reference, BackwardMap, CanvasFrame,
    Mosaic, Raster,
};
use crate::diagnostics::{measure, Region};
use crate::error::{Error, Result};
use crate::estimation::{
    detect_and_match, inlier_rms, ransac, rectify_consensus, refine_partition, CorrespondenceSet, MatchOptions,
};
use crate::geometry::{Homography, Point};
use crate::quasi::QuasiHomography;
use crate::warp::{Mirror, Warp};

const METRIC_SAMPLES: usize = 33;
const PROFILE_SAMPLES: usize = 17;

pub(crate) fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

pub(crate) fn dims(r: &Raster) -> (usize, usize) {
    (r.width, r.height)
}

/// Both rasters with a common channel count.
pub(crate) fn harmonize<'a>(images: &[&'a Raster]) -> Vec<Cow<'a, Raster>> {
    let rgb = images.iter().any(|r| r.channels == 3);
    images
        .iter()
        .map(|r| if rgb && r.channels != 3 { Cow::Owned(r.to_rgb()) } else { Cow::Borrowed(*r) })
        .collect()
}

/// Estimated homography of one adjacent pair plus the frame it is worked in.
#[derive(Debug, Clone)]
pub(crate) struct PairEstimate {
    /// Target → reference in the original frames.
    pub h0: Homography,
    /// The same map in the working frames (mirrored when the target lies
    /// left of the reference).
    pub working: Homography,
    pub mirror: Option<Mirror>,
    pub inliers: usize,
    pub correspondences: usize,
    pub iterations: usize,
    pub rms: f64,
}

pub(crate) fn estimate_pair(
    target_dims: (usize, usize),
    ref_dims: (usize, usize),
    corrs: &CorrespondenceSet,
    opts: &StitchOptions,
) -> Result<PairEstimate> {
    let r = ransac(corrs, &opts.ransac)?;
    let (tw, th) = (target_dims.0 as f64, target_dims.1 as f64);
    let center = r.homography.apply(Point::new((tw - 1.0) / 2.0, (th - 1.0) / 2.0))?;
    let mirror = (center.x < (ref_dims.0 as f64 - 1.0) / 2.0).then_some(Mirror {
        source_width: tw,
        dest_width: ref_dims.0 as f64,
    });
    let working = match (opts.rectify, mirror) {
        (true, Some(m)) => {
            let wc = corrs.map_points(|p| m.source(p), |p| m.dest(p));
            rectify_consensus(&wc, &r.inlier_mask, tw, th)?
        }
        (true, None) => rectify_consensus(corrs, &r.inlier_mask, tw, th)?,
        (false, Some(m)) => m.conjugate(&r.homography)?,
        (false, None) => r.homography,
    };
    let h0 = match mirror {
        Some(m) => m.conjugate(&working)?,
        None => working,
    };
    Ok(PairEstimate {
        h0,
        working,
        mirror,
        inliers: r.inlier_count(),
        correspondences: corrs.len(),
        iterations: r.iterations,
        rms: inlier_rms(&h0, corrs, &r.inlier_mask),
    })
}

/// Working-frame column extent `[floor(min), ceil(max)]` of target points
/// that land on the reference rectangle under the base homography.
pub(crate) fn overlap_columns(est: &PairEstimate, target_dims: (usize, usize), ref_dims: (usize, usize)) -> Result<(i64, i64)> {
    const EDGE: f64 = 1e-9;
    let hstage = Stage::homography(est.working)?.with_mirror(est.mirror);
    let (wm, hm) = (target_dims.0 as f64 - 1.0, target_dims.1 as f64 - 1.0);
    let extent = (0..ref_dims.1)
        .into_par_iter()
        .map(|y| {
            let mut acc: Option<(f64, f64)> = None;
            for x in 0..ref_dims.0 {
                let Ok(p) = hstage.backward(Point::new(x as f64, y as f64)) else { continue };
                if p.x >= -EDGE && p.y >= -EDGE && p.x <= wm + EDGE && p.y <= hm + EDGE {
                    let wx = hstage.to_working(p).x;
                    acc = Some(acc.map_or((wx, wx), |(lo, hi)| (lo.min(wx), hi.max(wx))));
                }
            }
            acc
        })
        .reduce(
            || None,
            |a, b| match (a, b) {
                (Some((l1, h1)), Some((l2, h2))) => Some((l1.min(l2), h1.max(h2))),
                (a, None) => a,
                (None, b) => b,
            },
        );
    let (lo, hi) = extent.ok_or(Error::NoOverlap)?;
    Ok(((lo + 1e-7).floor() as i64, (hi - 1e-7).ceil() as i64))
}

/// The warp stage for a pair; the flag reports a fallback to the plain
/// homography.
pub(crate) fn build_stage(est: &PairEstimate, x_star: f64, opts: &StitchOptions) -> Result<(Stage, bool)> {
    let homography = || Ok::<_, Error>(Stage::homography(est.working)?.with_mirror(est.mirror));
    match opts.mode {
        WarpMode::Homography => Ok((homography()?, false)),
        WarpMode::Quasi => match QuasiHomography::build(est.working, x_star) {
            Ok(q) => Ok((Stage::quasi(q).with_mirror(est.mirror), false)),
            Err(Error::AffineDegenerate) if opts.fallback_to_homography => Ok((homography()?, true)),
            Err(e) => Err(e),
        },
    }
}

/// Distortion beyond the partition and the scale profile along the horizon
/// row (or the middle row for affine maps).
pub(crate) fn warp_diagnostics(
    stage: &Stage,
    est: &PairEstimate,
    x_star: f64,
    target_dims: (usize, usize),
) -> (Option<crate::diagnostics::DistortionMetrics>, Vec<[f64; 2]>) {
    let (wm, hm) = (target_dims.0 as f64 - 1.0, target_dims.1 as f64 - 1.0);
    let row = est.working.horizon_row().unwrap_or(hm / 2.0);
    let metrics = (x_star < wm)
        .then(|| {
            let x_range = if est.mirror.is_some() { (0.0, wm - x_star) } else { (x_star, wm) };
            measure(stage, Region { x_range, y_range: (0.0, hm) }, row, METRIC_SAMPLES).ok()
        })
        .flatten();
    let profile = (0..PROFILE_SAMPLES)
        .filter_map(|i| {
            let x = wm * i as f64 / (PROFILE_SAMPLES - 1) as f64;
            stage.forward(Point::new(x, row)).ok().map(|q| [x, q.x])
        })
        .collect();
    (metrics, profile)
}

struct PairPass {
    frame: CanvasFrame,
    map: BackwardMap,
    mosaic: Mosaic,
    seam_cost: f64,
}

fn composite_pair(
    target: &Raster,
    reference: &Raster,
    stage: &Stage,
    opts: &StitchOptions,
    pin_beyond: Option<f64>,
    timings: &mut Timings,
) -> Result<PairPass> {
    let t = Instant::now();
    let frame = canvas_bounds(stage, dims(target), dims(reference), opts.canvas_cap)?;
    let map = BackwardMap::compute(stage, frame, dims(target));
    timings.warp_map_ms += ms(t);

    let t = Instant::now();
    let warped = map.remap(target);
    let ref_canvas = place_reference(reference, frame);
    timings.resample_ms += ms(t);

    let t = Instant::now();
    let overlap = overlap_mask(&ref_canvas, &warped);
    if !overlap.iter().any(|&o| o) {
        return Err(Error::NoOverlap);
    }
    let pins: Vec<bool> = match pin_beyond {
        Some(xs) => overlap
            .iter()
            .zip(&map.coords)
            .map(|(&o, c)| o && c.is_some_and(|p| stage.to_working(p).x > xs))
            .collect(),
        None => Vec::new(),
    };
    let cut = find_seam_pinned(&ref_canvas, &warped, &overlap, &pins)?;
    timings.seam_ms += ms(t);

    let t = Instant::now();
    let labels = pair_labels(&ref_canvas, &warped, Some(&cut));
    let mosaic = blend(&[&ref_canvas, &warped], &labels, opts.feather_px)?;
    timings.blend_ms += ms(t);
    Ok(PairPass {
        frame,
        map,
        mosaic,
        seam_cost: cut.cost,
    })
}

/// Two-image stitch. Correspondences map target points (source) to
/// reference points (dest); when absent they are detected.
pub fn stitch_pair(
    target: &Raster,
    reference: &Raster,
    corrs: Option<&CorrespondenceSet>,
    opts: &StitchOptions,
) -> Result<Stitched> {
    opts.validate()?;
    let start = Instant::now();
    let mut timings = Timings::default();
    let images = harmonize(&[target, reference]);
    let (target, reference) = (images[0].as_ref(), images[1].as_ref());
    let (tdims, rdims) = (dims(target), dims(reference));

    let detected;
    let corrs = match corrs {
        Some(c) => c,
        None => {
            let t = Instant::now();
            detected = detect_and_match(target, reference, &MatchOptions::default())?;
            timings.matching_ms = ms(t);
            &detected
        }
    };

    let t = Instant::now();
    let est = estimate_pair(tdims, rdims, corrs, opts)?;
    let (lo, hi) = overlap_columns(&est, tdims, rdims)?;
    timings.estimation_ms = ms(t);

    let x_initial = (hi + 1) as f64;
    let (mut stage, fallback) = build_stage(&est, x_initial, opts)?;
    let mut pass = composite_pair(target, reference, &stage, opts, None, &mut timings)?;
    let mut x_star = x_initial;

    if opts.refine_partition && stage.quasi_map().is_some() {
        let w = pass.frame.width;
        let cols: Vec<i64> = pass
            .mosaic
            .seam
            .iter()
            .filter_map(|&[x, y]| pass.map.coords[y * w + x])
            .map(|p| stage.to_working(p).x.floor() as i64)
            .collect();
        // A cut that never crosses the overlap leaves nothing to refine.
        if !cols.is_empty() {
            let refined = refine_partition(&cols, hi)?;
            if refined <= lo as f64 {
                return Err(Error::PartitionInsideOverlap { x_star: refined });
            }
            if refined < x_initial {
                let (next, _) = build_stage(&est, refined, opts)?;
                pass = composite_pair(target, reference, &next, opts, Some(refined), &mut timings)?;
                stage = next;
                x_star = refined;
            }
        }
    }

    let (non_overlap_metrics, scale_profile) = warp_diagnostics(&stage, &est, x_star, tdims);
    let pair = PairReport {
        pair: 0,
        target: 0,
        reference: 1,
        homography: est.h0.params(),
        warp: if stage.quasi_map().is_some() { WarpMode::Quasi } else { WarpMode::Homography },
        fallback,
        mirrored: est.mirror.is_some(),
        x_star,
        x_star_initial: x_initial,
        y_star: est.working.horizon_row().ok(),
        overlap_columns: [lo, hi],
        correspondences: est.correspondences,
        inliers: est.inliers,
        inlier_rms: est.rms,
        ransac_iterations: est.iterations,
        seam_cost: pass.seam_cost,
        non_overlap_metrics,
        scale_profile,
    };
    timings.total_ms = ms(start);
    Ok(Stitched {
        mosaic: pass.mosaic,
        frame: pass.frame,
        report: StitchReport {
            mode: opts.mode,
            reference_index: 1,
            pairs: vec![pair],
            timings: Some(timings),
            config: None,
        },
    })
}
