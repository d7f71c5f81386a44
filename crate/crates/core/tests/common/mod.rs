#![allow(dead_code)]

use quasiwarp::compositing::Raster;
use quasiwarp::estimation::{Correspondence, CorrespondenceSet};
use quasiwarp::{Homography, Point};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn hash(a: i64, b: i64, salt: u64) -> u64 {
    let mut h = (a as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (b as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F) ^ salt;
    h ^= h >> 31;
    h = h.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    h ^= h >> 29;
    h
}

fn unit(a: i64, b: i64, salt: u64) -> f64 {
    (hash(a, b, salt) >> 11) as f64 / (1u64 << 53) as f64
}

const CELL: f64 = 36.0;

/// Continuous RGB scene in `[0, 1]`: low-frequency waves plus a jittered
/// lattice of Gaussian blobs (corner-like structure for the detector).
pub fn scene(x: f64, y: f64) -> [f32; 3] {
    let mut c = [
        0.45 + 0.12 * (x / 61.0).sin() * (y / 47.0).cos(),
        0.45 + 0.12 * ((x + 2.0 * y) / 83.0).sin(),
        0.45 + 0.12 * ((x - y) / 71.0).cos(),
    ];
    let (ci, cj) = ((x / CELL).floor() as i64, (y / CELL).floor() as i64);
    for j in cj - 1..=cj + 1 {
        for i in ci - 1..=ci + 1 {
            let bx = (i as f64 + 0.2 + 0.6 * unit(i, j, 1)) * CELL;
            let by = (j as f64 + 0.2 + 0.6 * unit(i, j, 2)) * CELL;
            let sigma = 3.0 + 2.0 * unit(i, j, 3);
            let amp = 0.35 * (unit(i, j, 4) - 0.5);
            let d2 = (x - bx).powi(2) + (y - by).powi(2);
            let g = amp * (-d2 / (2.0 * sigma * sigma)).exp();
            let k = (hash(i, j, 5) % 3) as usize;
            c[k] += g;
            c[(k + 1) % 3] += 0.5 * g;
        }
    }
    c.map(|v| v as f32)
}

/// `w × h` view whose pixel `(x, y)` shows scene point `map(x, y)`.
pub fn render(w: usize, h: usize, map: impl Fn(Point) -> Point) -> Raster {
    Raster::from_fn(w, h, 3, |x, y, px| {
        let p = map(Point::new(x as f64, y as f64));
        px.copy_from_slice(&scene(p.x, p.y));
    })
}

pub fn crop(x0: f64, y0: f64, w: usize, h: usize) -> Raster {
    render(w, h, |p| Point::new(p.x + x0, p.y + y0))
}

/// Correspondences `p → h(p)` over the target rectangle whose images land in
/// `dest_dims`, with Gaussian noise on the destination and a fraction of
/// uniformly random outliers.
pub fn correspondences(
    h: &Homography,
    target_dims: (usize, usize),
    dest_dims: (usize, usize),
    count: usize,
    outlier_fraction: f64,
    noise: f64,
    seed: u64,
) -> CorrespondenceSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise.max(1e-300)).unwrap();
    let (tw, th) = (target_dims.0 as f64 - 1.0, target_dims.1 as f64 - 1.0);
    let (dw, dh) = (dest_dims.0 as f64 - 1.0, dest_dims.1 as f64 - 1.0);
    let outliers = (count as f64 * outlier_fraction).round() as usize;
    let mut items = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while items.len() < count - outliers {
        attempts += 1;
        assert!(attempts < 1000 * count, "too few target points land in the destination");
        let p = Point::new(rng.random_range(0.0..=tw), rng.random_range(0.0..=th));
        let Ok(q) = h.apply(p) else { continue };
        if q.x < 0.0 || q.y < 0.0 || q.x > dw || q.y > dh {
            continue;
        }
        let q = if noise > 0.0 { Point::new(q.x + normal.sample(&mut rng), q.y + normal.sample(&mut rng)) } else { q };
        items.push(Correspondence::new(p, q));
    }
    for _ in 0..outliers {
        let p = Point::new(rng.random_range(0.0..=tw), rng.random_range(0.0..=th));
        let q = Point::new(rng.random_range(0.0..=dw), rng.random_range(0.0..=dh));
        items.push(Correspondence::new(p, q));
    }
    // Interleave outliers so position in the file carries no information.
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
    CorrespondenceSet::new(items)
}

/// Mask of canvas pixels at Chebyshev distance > `band` from every seam pixel.
pub fn outside_seam_bands(width: usize, height: usize, seam: &[[usize; 2]], band: usize) -> Vec<bool> {
    let mut keep = vec![true; width * height];
    for &[sx, sy] in seam {
        for y in sy.saturating_sub(band)..(sy + band + 1).min(height) {
            for x in sx.saturating_sub(band)..(sx + band + 1).min(width) {
                keep[y * width + x] = false;
            }
        }
    }
    keep
}

/// Ground truth for a canvas placed by `frame`, when reference pixel
/// `(x, y)` shows scene point `(x + ref_offset.x, y + ref_offset.y)`.
pub fn scene_canvas(frame: &quasiwarp::compositing::CanvasFrame, ref_offset: Point) -> Raster {
    render(frame.width, frame.height, |p| {
        Point::new(p.x - frame.origin.x + ref_offset.x, p.y - frame.origin.y + ref_offset.y)
    })
}
