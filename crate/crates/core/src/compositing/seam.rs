use rayon::prelude::*;

use super::maxflow::{Graph, Segment};
use super::raster::Raster;
use crate::error::{Error, Result};

/// Binary labeling of the overlap. `from_a[i]` is meaningful only where the
/// overlap mask is set.
#[derive(Debug, Clone, PartialEq)]
pub struct SeamCut {
    pub from_a: Vec<bool>,
    pub cost: f64,
}

#[inline]
fn color_distance(a: &Raster, b: &Raster, i: usize) -> f64 {
    let ch = a.channels;
    let (pa, pb) = (&a.data[i * ch..(i + 1) * ch], &b.data[i * ch..(i + 1) * ch]);
    pa.iter()
        .zip(pb)
        .map(|(x, y)| ((x - y) as f64).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn neighbors(i: usize, w: usize, h: usize) -> impl Iterator<Item = usize> {
    let (x, y) = (i % w, i / w);
    [
        (x > 0).then(|| i - 1),
        (x + 1 < w).then(|| i + 1),
        (y > 0).then(|| i - w),
        (y + 1 < h).then(|| i + w),
    ]
    .into_iter()
    .flatten()
}

/// 4-connected components of the mask, each listed in scanline order.
pub fn components(mask: &[bool], w: usize, h: usize) -> Vec<Vec<usize>> {
    let mut seen = vec![false; mask.len()];
    let mut out = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut k = 0;
        while k < comp.len() {
            let i = comp[k];
            k += 1;
            for j in neighbors(i, w, h) {
                if mask[j] && !seen[j] {
                    seen[j] = true;
                    comp.push(j);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Cost of a cut edge between 4-neighbors `p`, `q` of the overlap.
pub fn edge_cost(a: &Raster, b: &Raster, p: usize, q: usize) -> f64 {
    color_distance(a, b, p) + color_distance(a, b, q)
}

/// Total seam energy of a labeling over the overlap.
pub fn seam_cost(a: &Raster, b: &Raster, overlap: &[bool], from_a: &[bool]) -> f64 {
    let (w, h) = (a.width, a.height);
    let mut cost = 0.0;
    for i in 0..overlap.len() {
        if !overlap[i] {
            continue;
        }
        let (x, y) = (i % w, i / w);
        for j in [(x + 1 < w).then(|| i + 1), (y + 1 < h).then(|| i + w)].into_iter().flatten() {
            if overlap[j] && from_a[i] != from_a[j] {
                cost += edge_cost(a, b, i, j);
            }
        }
    }
    cost
}

/// Terminal attachment of an overlap pixel: adjacent to `a`-only pixels,
/// `b`-only pixels, both, or neither.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    Free,
    A,
    B,
    Conflict,
}

pub fn anchors(a: &Raster, b: &Raster, overlap: &[bool]) -> Vec<Anchor> {
    let (w, h) = (a.width, a.height);
    (0..overlap.len())
        .map(|i| {
            if !overlap[i] {
                return Anchor::Free;
            }
            let (mut to_a, mut to_b) = (false, false);
            for j in neighbors(i, w, h) {
                if overlap[j] {
                    continue;
                }
                to_a |= a.valid[j] && !b.valid[j];
                to_b |= b.valid[j] && !a.valid[j];
            }
            match (to_a, to_b) {
                (true, true) => Anchor::Conflict,
                (true, false) => Anchor::A,
                (false, true) => Anchor::B,
                _ => Anchor::Free,
            }
        })
        .collect()
}

fn cut_component(a: &Raster, b: &Raster, overlap: &[bool], anchor: &[Anchor], comp: &[usize]) -> Vec<(usize, bool)> {
    let (w, h) = (a.width, a.height);
    let local = |i: usize| comp.binary_search(&i).ok();
    let mut edges = Vec::new();
    let mut total = 0.0;
    for (k, &i) in comp.iter().enumerate() {
        let (x, y) = (i % w, i / w);
        for j in [(x + 1 < w).then(|| i + 1), (y + 1 < h).then(|| i + w)].into_iter().flatten() {
            if overlap[j] {
                let c = edge_cost(a, b, i, j);
                total += c;
                edges.push((k, local(j).expect("same component"), c));
            }
        }
    }
    // Anchors must never be cut: any capacity above the sum of all
    // pairwise edges does that.
    let hard = 2.0 * total + 1.0;
    let mut g = Graph::new(comp.len());
    for (k, &i) in comp.iter().enumerate() {
        match anchor[i] {
            Anchor::A => g.add_terminal(k, hard, 0.0),
            Anchor::B => g.add_terminal(k, 0.0, hard),
            _ => {}
        }
    }
    for (p, q, c) in edges {
        g.add_edge(p, q, c, c);
    }
    let (_, seg) = g.solve();
    comp.iter()
        .zip(seg)
        .map(|(&i, s)| (i, s == Segment::Source))
        .collect()
}

/// Min-cut labeling of the overlap between canvas rasters `a` and `b`.
/// Pixels next to `a`-only territory are pinned to `a`, those next to
/// `b`-only territory to `b`; pixels touching both stay unconstrained.
/// Components without any pinned pixel default to `a`.
pub fn find_seam(a: &Raster, b: &Raster, overlap: &[bool]) -> Result<SeamCut> {
    find_seam_pinned(a, b, overlap, &[])
}

/// As [`find_seam`], with overlap pixels flagged in `pin_b` forced to `b`.
/// An empty `pin_b` pins nothing.
pub fn find_seam_pinned(a: &Raster, b: &Raster, overlap: &[bool], pin_b: &[bool]) -> Result<SeamCut> {
    if !pin_b.is_empty() && pin_b.len() != overlap.len() {
        return Err(Error::InvalidInput("pin mask disagrees in size".into()));
    }
    if a.width != b.width || a.height != b.height || a.channels != b.channels || overlap.len() != a.width * a.height {
        return Err(Error::InvalidInput("seam inputs disagree in size".into()));
    }
    if !overlap.iter().any(|&o| o) {
        return Err(Error::NoOverlap);
    }
    let mut anchor = anchors(a, b, overlap);
    for (k, &p) in anchor.iter_mut().zip(pin_b) {
        if p {
            *k = Anchor::B;
        }
    }
    let comps = components(overlap, a.width, a.height);
    let labels: Vec<Vec<(usize, bool)>> = comps
        .par_iter()
        .map(|comp| cut_component(a, b, overlap, &anchor, comp))
        .collect();
    let mut from_a = vec![true; overlap.len()];
    for (i, la) in labels.into_iter().flatten() {
        from_a[i] = la;
    }
    let cost = seam_cost(a, b, overlap, &from_a);
    Ok(SeamCut { from_a, cost })
}

/// Overlap mask of two canvas rasters.
pub fn overlap_mask(a: &Raster, b: &Raster) -> Vec<bool> {
    a.valid.iter().zip(&b.valid).map(|(&p, &q)| p && q).collect()
}
