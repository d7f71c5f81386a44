//! The quasi-homography warp.
//!
//! Left of the partition column `x*` the warp is the base homography `H0`.
//! Right of it, a point `(x, y)` is sent to the intersection of two lines:
//!
//! * the `H0`-image of row `y`, i.e. the line through `H0(x*, y)` with
//!   direction `slope_h(y)`;
//! * the line through `(f*(x), g*)` with direction `slope_v(x)`, where
//!   `g*` is the constant image ordinate of the horizon row `y*` and
//!   `f*(x) = f0(x*, y*) + f0'(x*, y*) (x - x*)` linearizes the scale
//!   along that row.
//!
//! Mesh shape is inherited from `H0`; only spacing along the horizon row
//! changes, and it becomes uniform.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{intersect_lines, Homography, Point};
use crate::warp::Warp;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiHomography {
    base: Homography,
    base_inv: Homography,
    x_star: f64,
    y_star: f64,
    f_at_anchor: f64,
    df_at_anchor: f64,
    g_at_anchor: f64,
}

impl QuasiHomography {
    pub fn build(base: Homography, x_star: f64) -> Result<Self> {
        if !x_star.is_finite() {
            return Err(Error::InvalidInput("partition abscissa must be finite".into()));
        }
        let y_star = base.horizon_row()?;
        let anchor = Point::new(x_star, y_star);
        let image = base.apply(anchor)?;
        let df = base.dfdx(anchor)?;
        if !(df > 0.0) {
            return Err(Error::NonMonotoneScale { derivative: df });
        }
        Ok(QuasiHomography {
            base,
            base_inv: base.invert()?,
            x_star,
            y_star,
            f_at_anchor: image.x,
            df_at_anchor: df,
            g_at_anchor: image.y,
        })
    }

    #[inline]
    pub fn base(&self) -> &Homography {
        &self.base
    }

    #[inline]
    pub fn x_star(&self) -> f64 {
        self.x_star
    }

    #[inline]
    pub fn y_star(&self) -> f64 {
        self.y_star
    }

    #[inline]
    pub fn f_at_anchor(&self) -> f64 {
        self.f_at_anchor
    }

    #[inline]
    pub fn df_at_anchor(&self) -> f64 {
        self.df_at_anchor
    }

    /// Image ordinate shared by every point of the horizon row.
    #[inline]
    pub fn g_at_anchor(&self) -> f64 {
        self.g_at_anchor
    }

    /// Linearized abscissa along the horizon row.
    #[inline]
    pub fn f_linear(&self, x: f64) -> f64 {
        self.f_at_anchor + self.df_at_anchor * (x - self.x_star)
    }

    /// Image abscissa of `(x, y*)`: rational left of `x*`, linear right of it.
    pub fn f_dagger(&self, x: f64) -> Result<f64> {
        if x <= self.x_star {
            Ok(self.base.apply(Point::new(x, self.y_star))?.x)
        } else {
            Ok(self.f_linear(x))
        }
    }

    pub fn scale_profile(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.iter().map(|&x| self.f_dagger(x)).collect()
    }

    #[inline]
    pub fn in_overlap_side(&self, p: Point) -> bool {
        p.x <= self.x_star
    }

    pub fn forward(&self, p: Point) -> Result<Point> {
        if p.x <= self.x_star {
            return self.base.apply(p);
        }
        let row_anchor = self.base.apply(Point::new(self.x_star, p.y))?;
        let col_anchor = Point::new(self.f_linear(p.x), self.g_at_anchor);
        intersect_lines(
            row_anchor,
            self.base.slope_h(p.y),
            col_anchor,
            self.base.slope_v(p.x),
            self.base.tolerances().parallel,
        )
        .ok_or(Error::ParallelConstraintLines { x: p.x, y: p.y })
    }

    pub fn backward(&self, q: Point) -> Result<Point> {
        if let Ok(p) = self.base_inv.apply(q) {
            if p.x <= self.x_star {
                return Ok(p);
            }
        }

        // q lies on the H0-image of its source row, so the row comes from the
        // inverse homography.
        let y = self.base.inverse_y(q)?;

        // Column: (q - (f*(x), g*)) × slope_v(x) = 0 is quadratic in x.
        let [h1, h2, h3, h4, h5, h6, h7, h8] = self.base.params();
        let (a, b) = (h1 * h8 - h2 * h7, h3 * h8 - h2);
        let (c, e) = (h4 * h8 - h5 * h7, h6 * h8 - h5);
        let d = self.df_at_anchor;
        let u = q.x - self.f_at_anchor + d * self.x_star;
        let v = q.y - self.g_at_anchor;
        let m1 = -d * c;
        let m2 = u * c - d * e - v * a;
        let m3 = u * e - v * b;

        let roots = quadratic_roots(m1, m2, m3);
        if roots.is_empty() {
            return Err(Error::NoAdmissibleRoot { x: q.x, y: q.y });
        }
        let accept = 1e-6 * q.x.abs().max(q.y.abs()).max(1.0);
        let mut best: Option<(f64, Point)> = None;
        let mut landed_left = false;
        for x in roots {
            if x <= self.x_star {
                landed_left = true;
                continue;
            }
            let cand = Point::new(x, y);
            let Ok(img) = self.forward(cand) else { continue };
            let r = img.distance(q);
            // Far from the partition the column lines can fold back and hit
            // the same row again; the branch attached to x* is the nearer root.
            if r <= accept && best.is_none_or(|(_, bp)| x < bp.x) {
                best = Some((r, cand));
            }
        }
        match best {
            Some((_, p)) => Ok(p),
            None if landed_left => Err(Error::OutsideImage { x: q.x, y: q.y }),
            None => Err(Error::NoAdmissibleRoot { x: q.x, y: q.y }),
        }
    }

    pub fn mesh(&self, x_range: (f64, f64), y_range: (f64, f64), steps: (usize, usize)) -> Result<WarpedMesh> {
        WarpedMesh::sample(self, x_range, y_range, steps)
    }
}

impl Warp for QuasiHomography {
    fn forward(&self, p: Point) -> Result<Point> {
        QuasiHomography::forward(self, p)
    }

    fn backward(&self, q: Point) -> Result<Point> {
        QuasiHomography::backward(self, q)
    }
}

/// Evaluates a homography through the two-line construction: the image of
/// `p` as the meet of the row line through `H(x*, y)` and the column line
/// through `H(x, y*)`. Any `x*`, `y*` give the same answer as `H(p)`.
pub fn reformulated_apply(h: &Homography, x_star: f64, y_star: f64, p: Point) -> Result<Point> {
    let row_anchor = h.apply(Point::new(x_star, p.y))?;
    let col_anchor = h.apply(Point::new(p.x, y_star))?;
    intersect_lines(
        row_anchor,
        h.slope_h(p.y),
        col_anchor,
        h.slope_v(p.x),
        h.tolerances().parallel,
    )
    .ok_or(Error::ParallelConstraintLines { x: p.x, y: p.y })
}

/// Real roots of `m1 x² + m2 x + m3`, polished with Newton steps. Falls back
/// to the linear root when the leading coefficient vanishes.
fn quadratic_roots(m1: f64, m2: f64, m3: f64) -> Vec<f64> {
    let scale = m1.abs().max(m2.abs()).max(m3.abs());
    if scale == 0.0 || !scale.is_finite() {
        return Vec::new();
    }
    let (m1, m2, m3) = (m1 / scale, m2 / scale, m3 / scale);
    let mut roots = Vec::with_capacity(2);
    if m1.abs() <= 1e-14 * m2.abs().max(f64::MIN_POSITIVE) || m1 == 0.0 {
        if m2 != 0.0 {
            roots.push(-m3 / m2);
        }
    } else {
        let mut disc = m2 * m2 - 4.0 * m1 * m3;
        if disc < 0.0 {
            if disc > -1e-14 * m2 * m2 {
                disc = 0.0;
            } else {
                return roots;
            }
        }
        let t = -0.5 * (m2 + m2.signum() * disc.sqrt());
        if t != 0.0 {
            roots.push(t / m1);
            roots.push(m3 / t);
        } else {
            roots.push(0.0);
        }
    }
    for r in roots.iter_mut() {
        for _ in 0..2 {
            let f = (m1 * *r + m2) * *r + m3;
            let df = 2.0 * m1 * *r + m2;
            if df != 0.0 {
                *r -= f / df;
            }
        }
    }
    roots
}

/// A regular source grid and its image under a warp.
#[derive(Debug, Clone, Serialize)]
pub struct WarpedMesh {
    pub cols: usize,
    pub rows: usize,
    /// Row-major source nodes.
    pub grid_points: Vec<Point>,
    /// Row-major image nodes; `None` where the warp is undefined.
    pub image_points: Vec<Option<Point>>,
    /// Per-cell sign of the mapped quad's signed area: `1`, `-1`, or `0`
    /// for cells touching an invalid node.
    pub orientation: Vec<i8>,
}

impl WarpedMesh {
    pub fn sample<W: Warp + ?Sized>(
        warp: &W,
        x_range: (f64, f64),
        y_range: (f64, f64),
        steps: (usize, usize),
    ) -> Result<Self> {
        let (cols, rows) = steps;
        if cols < 2 || rows < 2 {
            return Err(Error::InvalidInput("mesh needs at least 2 steps per axis".into()));
        }
        let lerp = |r: (f64, f64), i: usize, n: usize| r.0 + (r.1 - r.0) * i as f64 / (n - 1) as f64;
        let mut grid_points = Vec::with_capacity(cols * rows);
        for j in 0..rows {
            for i in 0..cols {
                grid_points.push(Point::new(lerp(x_range, i, cols), lerp(y_range, j, rows)));
            }
        }
        let image_points: Vec<Option<Point>> = grid_points
            .iter()
            .map(|&p| warp.forward(p).ok().filter(|q| q.is_finite()))
            .collect();
        let mut orientation = Vec::with_capacity((cols - 1) * (rows - 1));
        for j in 0..rows - 1 {
            for i in 0..cols - 1 {
                let idx = [j * cols + i, j * cols + i + 1, (j + 1) * cols + i + 1, (j + 1) * cols + i];
                let quad: Option<Vec<Point>> = idx.iter().map(|&k| image_points[k]).collect();
                let sign = match quad {
                    Some(q) => {
                        let area: f64 = (0..4).map(|k| q[k].cross(q[(k + 1) % 4])).sum();
                        if area > 0.0 {
                            1
                        } else if area < 0.0 {
                            -1
                        } else {
                            0
                        }
                    }
                    None => 0,
                };
                orientation.push(sign);
            }
        }
        Ok(WarpedMesh {
            cols,
            rows,
            grid_points,
            image_points,
            orientation,
        })
    }

    pub fn image(&self, col: usize, row: usize) -> Option<Point> {
        self.image_points[row * self.cols + col]
    }

    pub fn all_same_orientation(&self) -> bool {
        let mut signs = self.orientation.iter().filter(|&&s| s != 0);
        match signs.next() {
            Some(&first) => signs.all(|&s| s == first),
            None => true,
        }
    }

    /// Cells whose orientation disagrees with the majority.
    pub fn fold_count(&self) -> usize {
        let pos = self.orientation.iter().filter(|&&s| s > 0).count();
        let neg = self.orientation.iter().filter(|&&s| s < 0).count();
        pos.min(neg)
    }

    /// JSON array of rows, each an array of `[x, y]` or `null`.
    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<Vec<Option<Point>>> = self
            .image_points
            .chunks(self.cols)
            .map(|r| r.to_vec())
            .collect();
        serde_json::to_value(rows).expect("points serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Direction;
    use proptest::prelude::*;

    fn running() -> Homography {
        Homography::new([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.001, 0.0]).unwrap()
    }

    // Independent 2×2 solver (Cramer) for the line-intersection oracle.
    fn cramer(a: [[f64; 2]; 2], b: [f64; 2]) -> [f64; 2] {
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        [
            (b[0] * a[1][1] - a[0][1] * b[1]) / det,
            (a[0][0] * b[1] - b[0] * a[1][0]) / det,
        ]
    }

    #[test]
    fn build_examples() {
        let q = QuasiHomography::build(running(), 0.0).unwrap();
        assert_eq!(q.y_star(), 0.0);
        assert_eq!(q.f_at_anchor(), 0.0);
        let fd = |x: f64| {
            let f = |x: f64| x / (0.001 * x + 1.0);
            let e = 1e-5;
            (f(x + e) - f(x - e)) / (2.0 * e)
        };
        assert!((q.df_at_anchor() - 1.0).abs() < 1e-12);
        assert!((q.df_at_anchor() - fd(0.0)).abs() < 1e-8);

        let q = QuasiHomography::build(running(), 100.0).unwrap();
        assert!((q.f_at_anchor() - 100.0 / 1.1).abs() < 1e-12);
        assert!((q.df_at_anchor() - 1.0 / 1.21).abs() < 1e-12);
        assert!((q.df_at_anchor() - fd(100.0)).abs() < 1e-8);

        let affine = Homography::new([1.1, 0.1, 5.0, 0.0, 0.9, 3.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            QuasiHomography::build(affine, 10.0),
            Err(Error::AffineDegenerate)
        ));
    }

    #[test]
    fn build_rejects_nonmonotone_scale() {
        // Mirror in x: f0 decreases along the horizon row.
        let h = Homography::new([-1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.001, 0.0]).unwrap();
        assert!(matches!(
            QuasiHomography::build(h, 0.0),
            Err(Error::NonMonotoneScale { .. })
        ));
    }

    #[test]
    fn cached_constants_match_fresh_evaluation() {
        let h = Homography::new([1.0, 0.2, 10.0, 0.05, 1.1, 20.0, 0.0005, 0.0002]).unwrap();
        let q = QuasiHomography::build(h, 333.0).unwrap();
        let a = Point::new(q.x_star(), q.y_star());
        assert!((q.f_at_anchor() - h.apply(a).unwrap().x).abs() < 1e-12);
        assert!((q.df_at_anchor() - h.dfdx(a).unwrap()).abs() < 1e-12);
        assert!(h.slope_h(q.y_star()).is_horizontal(1e-12));
    }

    #[test]
    fn forward_running_example() {
        let q = QuasiHomography::build(running(), 0.0).unwrap();
        // Oracle: vertical line x' = 100 and the line through (0, 50) with
        // slope -0.05, intersected with Cramer's rule.
        let [x, y] = cramer([[1.0, 0.0], [0.05, 1.0]], [100.0, 50.0]);
        let p = q.forward(Point::new(100.0, 50.0)).unwrap();
        assert!((p.x - x).abs() < 1e-12 && (p.y - y).abs() < 1e-12);
        assert!((p.x - 100.0).abs() < 1e-12 && (p.y - 45.0).abs() < 1e-12);

        let left = Point::new(-35.0, 12.0);
        assert_eq!(q.forward(left).unwrap(), running().apply(left).unwrap());
    }

    #[test]
    fn backward_running_example() {
        let q = QuasiHomography::build(running(), 0.0).unwrap();
        let p = q.backward(Point::new(100.0, 45.0)).unwrap();
        assert!(p.distance(Point::new(100.0, 50.0)) < 1e-9);

        let r = Point::new(-20.0, 30.0);
        let inv = running().invert().unwrap();
        assert_eq!(q.backward(r).unwrap(), inv.apply(r).unwrap());

        // Image of the partition column: both branches agree.
        let on = running().apply(Point::new(0.0, 77.0)).unwrap();
        assert!(q.backward(on).unwrap().distance(Point::new(0.0, 77.0)) < 1e-9);
    }

    #[test]
    fn scale_profile_examples() {
        let q = QuasiHomography::build(running(), 0.0).unwrap();
        let s = q.scale_profile(&[-10.0, 0.0, 10.0]).unwrap();
        assert!((s[0] + 10.0 / 0.99).abs() < 1e-12);
        assert_eq!(s[1], 0.0);
        assert!((s[2] - 10.0).abs() < 1e-12);

        let q = QuasiHomography::build(running(), 250.0).unwrap();
        let xs = [-100.0, 0.0, 120.5, 250.0];
        let s = q.scale_profile(&xs).unwrap();
        for (x, v) in xs.iter().zip(&s) {
            assert_eq!(*v, running().apply(Point::new(*x, 0.0)).unwrap().x);
        }
        let s = q.scale_profile(&[251.0, 252.0, 253.0]).unwrap();
        assert!((s[2] - 2.0 * s[1] + s[0]).abs() < 1e-10);
    }

    #[test]
    fn mesh_examples() {
        let q = QuasiHomography::build(running(), 400.0).unwrap();
        let m = q.mesh((0.0, 300.0), (0.0, 200.0), (5, 4)).unwrap();
        let hm = WarpedMesh::sample(&running(), (0.0, 300.0), (0.0, 200.0), (5, 4)).unwrap();
        assert_eq!(m.image_points, hm.image_points);

        let q = QuasiHomography::build(running(), 0.0).unwrap();
        let m = q.mesh((-400.0, 400.0), (-300.0, 300.0), (10, 10)).unwrap();
        assert!(m.all_same_orientation());
        assert_eq!(m.fold_count(), 0);
        assert!(m.orientation.iter().all(|&s| s != 0));

        let m = q.mesh((0.0, 1.0), (0.0, 1.0), (2, 2)).unwrap();
        assert_eq!(m.image_points.len(), 4);
        assert_eq!(m.orientation.len(), 1);
        assert!(q.mesh((0.0, 1.0), (0.0, 1.0), (1, 2)).is_err());
    }

    #[test]
    fn mesh_marks_vanishing_nodes_invalid() {
        let q = QuasiHomography::build(running(), 0.0).unwrap();
        // Column x = -1000 lies on the vanishing line of the base.
        let m = q.mesh((-1000.0, 0.0), (0.0, 10.0), (2, 2)).unwrap();
        assert!(m.image(0, 0).is_none());
        assert_eq!(m.orientation[0], 0);
    }

    #[test]
    fn reformulation_reproduces_homography() {
        let h = Homography::new([1.0, 0.2, 10.0, 0.05, 1.1, 20.0, 0.0005, 0.0002]).unwrap();
        for (xs, ys) in [(0.0, 0.0), (123.0, -40.0), (700.0, 300.0)] {
            for p in [Point::new(5.0, 9.0), Point::new(640.0, 480.0), Point::new(-50.0, 250.0)] {
                let a = reformulated_apply(&h, xs, ys, p).unwrap();
                assert!(a.distance(h.apply(p).unwrap()) < 1e-9);
            }
        }
    }

    fn quasi_strategy() -> impl Strategy<Value = QuasiHomography> {
        (
            0.9f64..1.1,
            -0.1f64..0.1,
            -100.0f64..100.0,
            -0.1f64..0.1,
            0.9f64..1.1,
            -50.0f64..50.0,
            prop_oneof![-6e-4f64..-1e-4, 1e-4f64..6e-4],
            -2e-4f64..2e-4,
            200.0f64..600.0,
        )
            .prop_filter_map("needs a horizon row", |(a, b, c, d, e, f, g, h, xs)| {
                let base = Homography::new([a, b, c, d, e, f, g, h]).ok()?;
                QuasiHomography::build(base, xs).ok()
            })
    }

    proptest! {
        #[test]
        fn continuity_at_partition(q in quasi_strategy(), y in 0.0f64..600.0) {
            let p = Point::new(q.x_star(), y);
            let left = q.base().apply(p).unwrap();
            // The right-hand branch formula evaluated on the partition column.
            let row = q.base().apply(p).unwrap();
            let col = Point::new(q.f_linear(p.x), q.g_at_anchor());
            let right = intersect_lines(row, q.base().slope_h(y), col, q.base().slope_v(p.x), 1e-12).unwrap();
            prop_assert!(left.distance(right) < 1e-9);
        }

        #[test]
        fn row_and_column_slopes_preserved(q in quasi_strategy(), y in 0.0f64..600.0, dx in 1.0f64..300.0) {
            let x1 = q.x_star() + 1.0;
            let pts: Vec<Point> = (0..3).map(|k| q.forward(Point::new(x1 + k as f64 * dx, y)).unwrap()).collect();
            let a = pts[1] - pts[0];
            let b = pts[2] - pts[0];
            prop_assert!(a.cross(b).abs() <= 1e-9 * a.norm() * b.norm());
            prop_assert!(q.base().slope_h(y).sin_angle(Direction::new(b.x, b.y)) < 1e-9);

            let x = q.x_star() + dx;
            let pts: Vec<Point> = (0..3).map(|k| q.forward(Point::new(x, 10.0 + k as f64 * 200.0)).unwrap()).collect();
            let a = pts[1] - pts[0];
            let b = pts[2] - pts[0];
            prop_assert!(a.cross(b).abs() <= 1e-9 * a.norm() * b.norm());
            prop_assert!(q.base().slope_v(x).sin_angle(Direction::new(b.x, b.y)) < 1e-9);
        }

        #[test]
        fn horizon_row_stays_level(q in quasi_strategy(), x1 in -200.0f64..1200.0, x2 in -200.0f64..1200.0) {
            let a = q.forward(Point::new(x1, q.y_star())).unwrap();
            let b = q.forward(Point::new(x2, q.y_star())).unwrap();
            prop_assert!((a.y - b.y).abs() <= 1e-9 * a.y.abs().max(1.0));
        }

        #[test]
        fn round_trip(q in quasi_strategy(), x in 0.0f64..800.0, y in 0.0f64..600.0) {
            let p = Point::new(x, y);
            let img = q.forward(p).unwrap();
            let back = q.backward(img).unwrap();
            prop_assert!(back.distance(p) < 1e-6, "{:?} -> {:?} -> {:?}", p, img, back);
            prop_assert!(q.forward(back).unwrap().distance(img) < 1e-6);
        }
    }
}
