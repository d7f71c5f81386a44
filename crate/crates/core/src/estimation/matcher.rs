//! A small corner detector and patch matcher for self-contained runs and
//! tests. Harris response, local-maximum suppression, zero-mean unit-norm
//! patch descriptors, nearest-neighbour matching with a ratio test and a
//! mutual-consistency check.

use rayon::prelude::*;

use super::correspondence::{Correspondence, CorrespondenceSet};
use crate::compositing::Raster;
use crate::error::{Error, Result};
use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchOptions {
    pub max_features: usize,
    pub patch_radius: usize,
    pub nms_radius: usize,
    /// Corner response threshold relative to the strongest response.
    pub response_ratio: f32,
    /// Lowe-style ratio between best and second-best descriptor distance.
    pub ratio: f32,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions {
            max_features: 800,
            patch_radius: 5,
            nms_radius: 3,
            response_ratio: 0.01,
            ratio: 0.8,
        }
    }
}

struct Feature {
    x: usize,
    y: usize,
    desc: Vec<f32>,
}

fn box_blur(src: &[f32], w: usize, h: usize, r: usize) -> Vec<f32> {
    let mut tmp = vec![0.0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let lo = x.saturating_sub(r);
            let hi = (x + r).min(w - 1);
            tmp[y * w + x] = src[y * w + lo..=y * w + hi].iter().sum::<f32>();
        }
    }
    let mut out = vec![0.0f32; w * h];
    for y in 0..h {
        let lo = y.saturating_sub(r);
        let hi = (y + r).min(h - 1);
        for x in 0..w {
            out[y * w + x] = (lo..=hi).map(|yy| tmp[yy * w + x]).sum();
        }
    }
    out
}

fn harris(gray: &Raster) -> Vec<f32> {
    let (w, h) = (gray.width, gray.height);
    let g = &gray.data;
    let mut ixx = vec![0.0f32; w * h];
    let mut iyy = vec![0.0f32; w * h];
    let mut ixy = vec![0.0f32; w * h];
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let at = |xx: usize, yy: usize| g[yy * w + xx];
            // Sobel
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            let i = y * w + x;
            ixx[i] = gx * gx;
            iyy[i] = gy * gy;
            ixy[i] = gx * gy;
        }
    }
    let sxx = box_blur(&ixx, w, h, 2);
    let syy = box_blur(&iyy, w, h, 2);
    let sxy = box_blur(&ixy, w, h, 2);
    (0..w * h)
        .map(|i| {
            let det = sxx[i] * syy[i] - sxy[i] * sxy[i];
            let tr = sxx[i] + syy[i];
            det - 0.04 * tr * tr
        })
        .collect()
}

fn detect(img: &Raster, opts: &MatchOptions) -> Vec<Feature> {
    let gray = img.to_gray();
    let (w, h) = (gray.width, gray.height);
    let margin = opts.patch_radius.max(opts.nms_radius) + 2;
    if w <= 2 * margin || h <= 2 * margin {
        return Vec::new();
    }
    let resp = harris(&gray);
    let peak = resp.iter().copied().fold(0.0f32, f32::max);
    if !(peak > 1e-8) {
        return Vec::new();
    }
    let floor = peak * opts.response_ratio;
    let nr = opts.nms_radius;
    let mut cands: Vec<(f32, usize, usize)> = Vec::new();
    for y in margin..h - margin {
        'px: for x in margin..w - margin {
            let v = resp[y * w + x];
            if v <= floor {
                continue;
            }
            for yy in y - nr..=y + nr {
                for xx in x - nr..=x + nr {
                    let u = resp[yy * w + xx];
                    // Strict maximum; ties resolved toward the earlier scanline position.
                    if u > v || (u == v && (yy, xx) < (y, x)) {
                        continue 'px;
                    }
                }
            }
            cands.push((v, x, y));
        }
    }
    cands.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.2, a.1).cmp(&(b.2, b.1))));
    cands.truncate(opts.max_features);

    let r = opts.patch_radius as isize;
    cands
        .into_iter()
        .filter(|&(_, x, y)| (0..=2 * r).all(|dy| (0..=2 * r).all(|dx| gray.is_valid((x as isize + dx - r) as usize, (y as isize + dy - r) as usize))))
        .filter_map(|(_, x, y)| {
            let mut desc = Vec::with_capacity(((2 * r + 1) * (2 * r + 1)) as usize);
            for dy in -r..=r {
                for dx in -r..=r {
                    desc.push(gray.pixel((x as isize + dx) as usize, (y as isize + dy) as usize)[0]);
                }
            }
            let mean = desc.iter().sum::<f32>() / desc.len() as f32;
            desc.iter_mut().for_each(|v| *v -= mean);
            let norm = desc.iter().map(|v| v * v).sum::<f32>().sqrt();
            if norm < 1e-6 {
                return None;
            }
            desc.iter_mut().for_each(|v| *v /= norm);
            Some(Feature { x, y, desc })
        })
        .collect()
}

fn dist2(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// Best and second-best match index and squared distance for each query.
fn nearest_two(query: &[Feature], pool: &[Feature]) -> Vec<Option<(usize, f32, f32)>> {
    query
        .par_iter()
        .map(|q| {
            let mut best = (usize::MAX, f32::INFINITY);
            let mut second = f32::INFINITY;
            for (j, p) in pool.iter().enumerate() {
                let d = dist2(&q.desc, &p.desc);
                if d < best.1 {
                    second = best.1;
                    best = (j, d);
                } else if d < second {
                    second = d;
                }
            }
            (best.0 != usize::MAX).then_some((best.0, best.1, second))
        })
        .collect()
}

/// Detects corners in both images and matches them; `source` points lie in
/// `a`, `dest` points in `b`.
pub fn detect_and_match(a: &Raster, b: &Raster, opts: &MatchOptions) -> Result<CorrespondenceSet> {
    let fa = detect(a, opts);
    let fb = detect(b, opts);
    if fa.len() < 4 || fb.len() < 4 {
        return Err(Error::TooFewFeatures {
            found: fa.len().min(fb.len()),
        });
    }
    let ab = nearest_two(&fa, &fb);
    let ba = nearest_two(&fb, &fa);
    let ratio2 = opts.ratio * opts.ratio;
    let mut items = Vec::new();
    for (i, m) in ab.iter().enumerate() {
        let Some((j, d1, d2)) = *m else { continue };
        if !(d1 < ratio2 * d2) {
            continue;
        }
        if ba[j].map(|(k, _, _)| k) != Some(i) {
            continue;
        }
        items.push(Correspondence::new(
            Point::new(fa[i].x as f64, fa[i].y as f64),
            Point::new(fb[j].x as f64, fb[j].y as f64),
        ));
    }
    if items.len() < 4 {
        return Err(Error::TooFewFeatures { found: items.len() });
    }
    Ok(CorrespondenceSet::new(items))
}
