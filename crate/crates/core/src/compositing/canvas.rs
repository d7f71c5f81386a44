use rayon::prelude::*;

use super::raster::Raster;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::warp::Warp;

/// Interior samples per target edge, in addition to the two corners.
pub const EDGE_SAMPLES: usize = 64;
pub const DEFAULT_CANVAS_CAP: usize = 20000;

/// Output canvas placement. `origin` is the canvas position of reference
/// pixel (0, 0); it is always integral so the reference pastes without
/// resampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanvasFrame {
    pub origin: Point,
    pub width: usize,
    pub height: usize,
}

impl CanvasFrame {
    /// Canvas pixel to reference-frame coordinates.
    #[inline]
    pub fn to_reference(&self, cx: usize, cy: usize) -> Point {
        Point::new(cx as f64 - self.origin.x, cy as f64 - self.origin.y)
    }

    #[inline]
    pub fn to_canvas(&self, p: Point) -> Point {
        p + self.origin
    }

    pub fn contains(&self, p: Point) -> bool {
        let c = self.to_canvas(p);
        c.x >= -1e-7 && c.y >= -1e-7 && c.x <= self.width as f64 - 1.0 + 1e-7 && c.y <= self.height as f64 - 1.0 + 1e-7
    }
}

/// Samples along the boundary of a `w × h` image: every edge gets its two
/// corners plus `EDGE_SAMPLES` evenly spaced interior points.
pub fn boundary_samples(w: usize, h: usize) -> Vec<Point> {
    let (xm, ym) = ((w.max(1) - 1) as f64, (h.max(1) - 1) as f64);
    let corners = [Point::new(0.0, 0.0), Point::new(xm, 0.0), Point::new(xm, ym), Point::new(0.0, ym)];
    let mut out = Vec::with_capacity(4 * (EDGE_SAMPLES + 2));
    for k in 0..4 {
        let (a, b) = (corners[k], corners[(k + 1) % 4]);
        for i in 0..EDGE_SAMPLES + 2 {
            let t = i as f64 / (EDGE_SAMPLES + 1) as f64;
            out.push(a + (b - a) * t);
        }
    }
    out
}

/// Floor/ceil that absorb rounding noise around integers.
fn snap_floor(v: f64) -> f64 {
    (v + 1e-7).floor()
}

fn snap_ceil(v: f64) -> f64 {
    (v - 1e-7).ceil()
}

/// Bounding frame of one or more warped images united with the reference
/// rectangle. Each entry pairs a warp with its source image size.
pub fn canvas_bounds_multi(
    warps: &[(&dyn Warp, (usize, usize))],
    ref_dims: (usize, usize),
    cap: usize,
) -> Result<CanvasFrame> {
    let (mut x0, mut y0) = (0.0f64, 0.0f64);
    let (mut x1, mut y1) = ((ref_dims.0.max(1) - 1) as f64, (ref_dims.1.max(1) - 1) as f64);
    for (warp, (w, h)) in warps {
        for p in boundary_samples(*w, *h) {
            let q = warp
                .forward(p)
                .map_err(|e| Error::UnboundedWarp(format!("boundary sample ({}, {}): {e}", p.x, p.y)))?;
            if !q.is_finite() {
                return Err(Error::UnboundedWarp(format!("boundary sample ({}, {}) maps to infinity", p.x, p.y)));
            }
            x0 = x0.min(q.x);
            y0 = y0.min(q.y);
            x1 = x1.max(q.x);
            y1 = y1.max(q.y);
        }
    }
    let (x0, y0, x1, y1) = (snap_floor(x0), snap_floor(y0), snap_ceil(x1), snap_ceil(y1));
    let width = x1 - x0 + 1.0;
    let height = y1 - y0 + 1.0;
    if width > cap as f64 || height > cap as f64 {
        return Err(Error::UnboundedWarp(format!(
            "canvas {width}×{height} exceeds the {cap} px cap"
        )));
    }
    Ok(CanvasFrame {
        origin: Point::new(-x0, -y0),
        width: width as usize,
        height: height as usize,
    })
}

pub fn canvas_bounds(
    warp: &dyn Warp,
    target_dims: (usize, usize),
    ref_dims: (usize, usize),
    cap: usize,
) -> Result<CanvasFrame> {
    canvas_bounds_multi(&[(warp, target_dims)], ref_dims, cap)
}

/// Per-canvas-pixel source coordinates of a backward warp; `None` where the
/// backward map fails or lands outside the `src_dims` rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardMap {
    pub frame: CanvasFrame,
    pub coords: Vec<Option<Point>>,
}

impl BackwardMap {
    pub fn compute(warp: &dyn Warp, frame: CanvasFrame, src_dims: (usize, usize)) -> Self {
        const EDGE: f64 = 1e-9;
        let (wm, hm) = ((src_dims.0 as f64) - 1.0, (src_dims.1 as f64) - 1.0);
        let mut coords = vec![None; frame.width * frame.height];
        coords
            .par_chunks_mut(frame.width.max(1))
            .enumerate()
            .for_each(|(cy, row)| {
                for (cx, slot) in row.iter_mut().enumerate() {
                    let q = frame.to_reference(cx, cy);
                    *slot = warp.backward(q).ok().filter(|p| {
                        p.x >= -EDGE && p.y >= -EDGE && p.x <= wm + EDGE && p.y <= hm + EDGE
                    });
                }
            });
        BackwardMap { frame, coords }
    }

    /// Bilinear fill of the canvas from `img`.
    pub fn remap(&self, img: &Raster) -> Raster {
        let (w, h, ch) = (self.frame.width, self.frame.height, img.channels);
        let mut out = Raster::empty(w, h, ch);
        out.data
            .par_chunks_mut((w * ch).max(1))
            .zip(out.valid.par_chunks_mut(w.max(1)))
            .enumerate()
            .for_each(|(cy, (row, valid))| {
                for cx in 0..w {
                    if let Some(p) = self.coords[cy * w + cx] {
                        valid[cx] = img.sample_bilinear(p.x, p.y, &mut row[cx * ch..(cx + 1) * ch]);
                    }
                }
            });
        out
    }
}

/// Resamples `img` onto the canvas through the backward direction of `warp`.
pub fn warp_image(warp: &dyn Warp, img: &Raster, frame: CanvasFrame) -> Raster {
    BackwardMap::compute(warp, frame, (img.width, img.height)).remap(img)
}

/// Pastes the reference onto the canvas at the integral origin.
pub fn place_reference(img: &Raster, frame: CanvasFrame) -> Raster {
    let mut out = Raster::empty(frame.width, frame.height, img.channels);
    let (ox, oy) = (frame.origin.x as isize, frame.origin.y as isize);
    for y in 0..img.height {
        for x in 0..img.width {
            let (cx, cy) = (x as isize + ox, y as isize + oy);
            if cx < 0 || cy < 0 || cx as usize >= frame.width || cy as usize >= frame.height {
                continue;
            }
            let (cx, cy) = (cx as usize, cy as usize);
            let i = out.index(cx, cy);
            out.valid[i] = img.is_valid(x, y);
            out.pixel_mut(cx, cy).copy_from_slice(img.pixel(x, y));
        }
    }
    out
}
