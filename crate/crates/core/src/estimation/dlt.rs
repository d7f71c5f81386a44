//! Normalized direct linear transform.

use nalgebra::{DMatrix, SMatrix};

use super::correspondence::{Correspondence, CorrespondenceSet};
use crate::error::{Error, Result};
use crate::geometry::{Homography, Point};

/// Singular-value ratio below which the null space is not one-dimensional.
const GAP_TOL: f64 = 1e-10;
const COLLINEAR_TOL: f64 = 1e-9;

/// Similarity taking points to zero centroid and mean distance √2.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Normalizer {
    pub cx: f64,
    pub cy: f64,
    pub s: f64,
}

impl Normalizer {
    pub fn fit(points: impl Iterator<Item = Point> + Clone) -> Self {
        let n = points.clone().count().max(1) as f64;
        let (sx, sy) = points.clone().fold((0.0, 0.0), |(a, b), p| (a + p.x, b + p.y));
        let (cx, cy) = (sx / n, sy / n);
        let mean = points.map(|p| (p.x - cx).hypot(p.y - cy)).sum::<f64>() / n;
        let s = if mean > 1e-12 { std::f64::consts::SQRT_2 / mean } else { 1.0 };
        Normalizer { cx, cy, s }
    }

    #[inline]
    pub fn apply(&self, p: Point) -> Point {
        Point::new(self.s * (p.x - self.cx), self.s * (p.y - self.cy))
    }

    pub fn matrix(&self) -> SMatrix<f64, 3, 3> {
        SMatrix::<f64, 3, 3>::new(
            self.s, 0.0, -self.s * self.cx,
            0.0, self.s, -self.s * self.cy,
            0.0, 0.0, 1.0,
        )
    }

    pub fn inverse_matrix(&self) -> SMatrix<f64, 3, 3> {
        SMatrix::<f64, 3, 3>::new(
            1.0 / self.s, 0.0, self.cx,
            0.0, 1.0 / self.s, self.cy,
            0.0, 0.0, 1.0,
        )
    }
}

/// The two design rows `a_i` of a correspondence, so that `a_i · vec(H) = 0`
/// for an exact match.
pub(crate) fn design_rows(s: Point, d: Point) -> [[f64; 9]; 2] {
    [
        [-s.x, -s.y, -1.0, 0.0, 0.0, 0.0, d.x * s.x, d.x * s.y, d.x],
        [0.0, 0.0, 0.0, -s.x, -s.y, -1.0, d.y * s.x, d.y * s.y, d.y],
    ]
}

pub(crate) struct NormalizedProblem {
    pub src: Normalizer,
    pub dst: Normalizer,
    pub a: DMatrix<f64>,
}

impl NormalizedProblem {
    pub fn new(items: &[Correspondence]) -> Self {
        let src = Normalizer::fit(items.iter().map(|c| c.source));
        let dst = Normalizer::fit(items.iter().map(|c| c.dest));
        // At least 9 rows so the SVD exposes a full right basis.
        let rows = (2 * items.len()).max(9);
        let mut a = DMatrix::<f64>::zeros(rows, 9);
        for (k, c) in items.iter().enumerate() {
            let w = c.weight.sqrt();
            let r = design_rows(src.apply(c.source), dst.apply(c.dest));
            for j in 0..9 {
                a[(2 * k, j)] = w * r[0][j];
                a[(2 * k + 1, j)] = w * r[1][j];
            }
        }
        NormalizedProblem { src, dst, a }
    }

    /// Maps a normalized-frame solution back to pixel coordinates.
    pub fn denormalize(&self, h: &[f64; 9]) -> Result<Homography> {
        let hn = SMatrix::<f64, 3, 3>::from_row_slice(h);
        let m = self.dst.inverse_matrix() * hn * self.src.matrix();
        Homography::from_matrix([
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ])
        .map_err(|e| match e {
            Error::InvalidInput(msg) => Error::IllConditioned(msg),
            other => other,
        })
    }

    /// Pixel-frame homography expressed as a unit 9-vector in the normalized frame.
    pub fn normalized_vector(&self, h: &Homography) -> [f64; 9] {
        let m = h.matrix();
        let hm = SMatrix::<f64, 3, 3>::from_fn(|i, j| m[i][j]);
        let hn = self.dst.matrix() * hm * self.src.inverse_matrix();
        let norm = hn.norm();
        let mut v = [0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                v[3 * i + j] = hn[(i, j)] / norm;
            }
        }
        v
    }
}

/// Right singular vector of the smallest singular value plus the ratio
/// `σ_(n-1) / σ_max` measuring how isolated that null direction is.
pub(crate) fn smallest_right_singular(a: &DMatrix<f64>) -> Result<(Vec<f64>, f64)> {
    let svd = a.clone().svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::IllConditioned("SVD did not converge".into()))?;
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[i].total_cmp(&sv[j]));
    let min = order[0];
    let max = *order.last().expect("non-empty");
    let gap = if order.len() > 1 && sv[max] > 0.0 {
        sv[order[1]] / sv[max]
    } else {
        0.0
    };
    Ok((v_t.row(min).iter().copied().collect(), gap))
}

fn collinear(a: Point, b: Point, c: Point) -> bool {
    let u = b - a;
    let v = c - a;
    u.cross(v).abs() <= COLLINEAR_TOL * u.norm() * v.norm() || u.norm() == 0.0 || v.norm() == 0.0
}

/// True when some three of the four points are collinear (or coincide).
pub(crate) fn minimal_sample_degenerate(pts: &[Point; 4]) -> bool {
    const TRIPLES: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    TRIPLES
        .iter()
        .any(|t| collinear(pts[t[0]], pts[t[1]], pts[t[2]]))
}

fn all_collinear(points: &[Point]) -> bool {
    let n = Normalizer::fit(points.iter().copied());
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let q = n.apply(*p);
        sxx += q.x * q.x;
        sxy += q.x * q.y;
        syy += q.y * q.y;
    }
    let tr = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    tr == 0.0 || det <= COLLINEAR_TOL * tr * tr
}

pub fn dlt(corrs: &CorrespondenceSet) -> Result<Homography> {
    dlt_items(&corrs.items)
}

pub(crate) fn dlt_items(items: &[Correspondence]) -> Result<Homography> {
    let items: Vec<Correspondence> = items.iter().filter(|c| c.weight > 0.0).copied().collect();
    if items.len() < 4 {
        return Err(Error::DegenerateConfiguration(format!(
            "{} correspondences, need at least 4",
            items.len()
        )));
    }
    let src: Vec<Point> = items.iter().map(|c| c.source).collect();
    let dst: Vec<Point> = items.iter().map(|c| c.dest).collect();
    if items.len() == 4 {
        if minimal_sample_degenerate(&[src[0], src[1], src[2], src[3]])
            || minimal_sample_degenerate(&[dst[0], dst[1], dst[2], dst[3]])
        {
            return Err(Error::DegenerateConfiguration("three points are collinear".into()));
        }
    } else if all_collinear(&src) || all_collinear(&dst) {
        return Err(Error::DegenerateConfiguration("points are collinear".into()));
    }
    let problem = NormalizedProblem::new(&items);
    let (h, gap) = smallest_right_singular(&problem.a)?;
    if gap < GAP_TOL {
        return Err(Error::IllConditioned(format!(
            "null space is not isolated (singular-value ratio {gap:e})"
        )));
    }
    let h: [f64; 9] = h.try_into().expect("nine entries");
    problem.denormalize(&h)
}

/// `Σ ‖a_i h‖²` with `h` the unit-norm parameter vector, evaluated in the
/// normalized frame of `items`.
pub fn algebraic_cost(h: &Homography, items: &[Correspondence]) -> f64 {
    let problem = NormalizedProblem::new(items);
    let v = problem.normalized_vector(h);
    let hv = nalgebra::DVector::from_column_slice(&v);
    (&problem.a * hv).norm_squared()
}
