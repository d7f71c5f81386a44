//! Planar projective geometry: points, homogeneous directions and the
//! eight-parameter homography with its mesh-slope fields.
//!
//! A homography is stored as `h1..h8` with the bottom-right matrix entry
//! fixed to 1:
//!
//! ```text
//! x' = (h1 x + h2 y + h3) / (h7 x + h8 y + 1)
//! y' = (h4 x + h5 y + h6) / (h7 x + h8 y + 1)
//! ```

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        [self.x, self.y].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let [x, y] = <[f64; 2]>::deserialize(deserializer)?;
        Ok(Point::new(x, y))
    }
}

/// A homogeneous 2-vector standing for the slope `dy / dx`. Vertical
/// directions have `dx == 0` and need no special casing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub dx: f64,
    pub dy: f64,
}

impl Direction {
    pub const HORIZONTAL: Direction = Direction { dx: 1.0, dy: 0.0 };
    pub const VERTICAL: Direction = Direction { dx: 0.0, dy: 1.0 };

    #[inline]
    pub const fn new(dx: f64, dy: f64) -> Self {
        Direction { dx, dy }
    }

    #[inline]
    pub fn cross(self, other: Direction) -> f64 {
        self.dx * other.dy - self.dy * other.dx
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.dx.hypot(self.dy)
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.dx == 0.0 && self.dy == 0.0
    }

    /// Sine of the angle between the two directions.
    pub fn sin_angle(self, other: Direction) -> f64 {
        let n = self.norm() * other.norm();
        if n == 0.0 {
            return 0.0;
        }
        (self.cross(other) / n).abs()
    }

    /// Parallel within `tol` measured as the sine of the enclosed angle.
    pub fn is_parallel(self, other: Direction, tol: f64) -> bool {
        self.sin_angle(other) <= tol
    }

    pub fn is_horizontal(self, tol: f64) -> bool {
        self.is_parallel(Direction::HORIZONTAL, tol)
    }

    pub fn is_vertical(self, tol: f64) -> bool {
        self.is_parallel(Direction::VERTICAL, tol)
    }

    /// Scalar slope `dy / dx`; infinite for vertical directions.
    pub fn slope(self) -> f64 {
        self.dy / self.dx
    }

    pub fn as_point(self) -> Point {
        Point::new(self.dx, self.dy)
    }
}

/// Numerical thresholds for degeneracy checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// `|det|` relative to the cubed Frobenius norm below which a matrix is singular.
    pub singular: f64,
    /// Denominator magnitude, relative to its terms, below which a point is on the vanishing line.
    pub vanishing: f64,
    /// `|h4 h8 - h5 h7|` below which the map is treated as affine along rows.
    pub affine: f64,
    /// Sine of the angle below which two constraint lines count as parallel.
    pub parallel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            singular: 1e-10,
            vanishing: 1e-10,
            affine: 1e-10,
            parallel: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Homography {
    h: [f64; 8],
    tol: Tolerances,
}

impl PartialEq for Homography {
    fn eq(&self, other: &Self) -> bool {
        self.h == other.h
    }
}

impl Homography {
    pub fn new(params: [f64; 8]) -> Result<Self> {
        Self::with_tolerances(params, Tolerances::default())
    }

    pub fn with_tolerances(params: [f64; 8], tol: Tolerances) -> Result<Self> {
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "homography parameters must be finite".into(),
            ));
        }
        let h = Homography { h: params, tol };
        let m = h.matrix();
        let det = det3(&m);
        let norm = frobenius(&m);
        if det.abs() <= tol.singular * norm.powi(3) {
            return Err(Error::SingularHomography);
        }
        Ok(h)
    }

    /// Builds from an arbitrary 3×3 matrix, rescaling so the bottom-right
    /// entry becomes 1.
    pub fn from_matrix(m: [[f64; 3]; 3]) -> Result<Self> {
        Self::from_matrix_with_tolerances(m, Tolerances::default())
    }

    pub fn from_matrix_with_tolerances(m: [[f64; 3]; 3], tol: Tolerances) -> Result<Self> {
        let norm = frobenius(&m);
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::SingularHomography);
        }
        let h9 = m[2][2];
        if h9.abs() <= tol.singular * norm {
            return Err(Error::InvalidInput(
                "bottom-right entry is too small to normalize to 1".into(),
            ));
        }
        let s = 1.0 / h9;
        Self::with_tolerances(
            [
                m[0][0] * s,
                m[0][1] * s,
                m[0][2] * s,
                m[1][0] * s,
                m[1][1] * s,
                m[1][2] * s,
                m[2][0] * s,
                m[2][1] * s,
            ],
            tol,
        )
    }

    pub fn identity() -> Self {
        Homography {
            h: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
            tol: Tolerances::default(),
        }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Homography {
            h: [1.0, 0.0, tx, 0.0, 1.0, ty, 0.0, 0.0],
            tol: Tolerances::default(),
        }
    }

    #[inline]
    pub fn params(&self) -> [f64; 8] {
        self.h
    }

    #[inline]
    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        let h = &self.h;
        [[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], 1.0]]
    }

    pub fn determinant(&self) -> f64 {
        det3(&self.matrix())
    }

    #[inline]
    pub fn denominator(&self, p: Point) -> f64 {
        self.h[6] * p.x + self.h[7] * p.y + 1.0
    }

    /// True when the denominator at `p` is too small to divide by.
    pub fn on_vanishing_line(&self, p: Point) -> bool {
        let den = self.denominator(p);
        let scale = (self.h[6] * p.x).abs() + (self.h[7] * p.y).abs() + 1.0;
        !(den.abs() > self.tol.vanishing * scale)
    }

    pub fn apply(&self, p: Point) -> Result<Point> {
        if self.on_vanishing_line(p) {
            return Err(Error::DegeneratePoint { x: p.x, y: p.y });
        }
        let h = &self.h;
        let den = self.denominator(p);
        Ok(Point::new(
            (h[0] * p.x + h[1] * p.y + h[2]) / den,
            (h[3] * p.x + h[4] * p.y + h[5]) / den,
        ))
    }

    /// Inverse via the adjugate, renormalized to a unit bottom-right entry.
    pub fn invert(&self) -> Result<Homography> {
        let m = self.matrix();
        let det = det3(&m);
        if det.abs() <= self.tol.singular * frobenius(&m).powi(3) {
            return Err(Error::SingularHomography);
        }
        let adj = adjugate(&m);
        Homography::from_matrix_with_tolerances(adj, self.tol)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Homography) -> Result<Homography> {
        let a = self.matrix();
        let b = other.matrix();
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        Homography::from_matrix_with_tolerances(m, self.tol)
    }

    /// Image direction of every horizontal line `y = const`; depends on `y` only.
    pub fn slope_h(&self, y: f64) -> Direction {
        let [h1, h2, h3, h4, h5, h6, h7, h8] = self.h;
        Direction::new(
            (h1 * h8 - h2 * h7) * y + (h1 - h3 * h7),
            (h4 * h8 - h5 * h7) * y + (h4 - h6 * h7),
        )
    }

    /// Image direction of every vertical line `x = const`; depends on `x` only.
    pub fn slope_v(&self, x: f64) -> Direction {
        let [h1, h2, h3, h4, h5, h6, h7, h8] = self.h;
        Direction::new(
            (h1 * h8 - h2 * h7) * x + (h3 * h8 - h2),
            (h4 * h8 - h5 * h7) * x + (h6 * h8 - h5),
        )
    }

    /// The row whose image stays horizontal.
    pub fn horizon_row(&self) -> Result<f64> {
        let [_, _, _, h4, h5, h6, h7, h8] = self.h;
        let den = h4 * h8 - h5 * h7;
        if !(den.abs() > self.tol.affine) {
            return Err(Error::AffineDegenerate);
        }
        Ok((h6 * h7 - h4) / den)
    }

    /// Analytic ∂f0/∂x at `p` (quotient rule on the first component).
    pub fn dfdx(&self, p: Point) -> Result<f64> {
        if self.on_vanishing_line(p) {
            return Err(Error::DegeneratePoint { x: p.x, y: p.y });
        }
        let [h1, h2, h3, _, _, _, h7, h8] = self.h;
        let den = self.denominator(p);
        Ok((h1 * (h8 * p.y + 1.0) - h7 * (h2 * p.y + h3)) / (den * den))
    }

    /// y-component of the inverse map written out in h1..h8, valid wherever
    /// its denominator is nonzero.
    pub fn inverse_y(&self, q: Point) -> Result<f64> {
        let [h1, h2, h3, h4, h5, h6, h7, h8] = self.h;
        let num = (h6 * h7 - h4) * q.x + (h1 - h3 * h7) * q.y + (h3 * h4 - h1 * h6);
        let den = (h4 * h8 - h5 * h7) * q.x + (h2 * h7 - h1 * h8) * q.y + (h1 * h5 - h2 * h4);
        let scale = ((h4 * h8 - h5 * h7) * q.x).abs()
            + ((h2 * h7 - h1 * h8) * q.y).abs()
            + (h1 * h5 - h2 * h4).abs();
        if !(den.abs() > self.tol.vanishing * scale) {
            return Err(Error::DegeneratePoint { x: q.x, y: q.y });
        }
        Ok(num / den)
    }

    /// Row-major nine-number text form.
    pub fn to_text(&self) -> String {
        let m = self.matrix();
        let rows: Vec<String> = m
            .iter()
            .map(|r| format!("{} {} {}", r[0], r[1], r[2]))
            .collect();
        rows.join("\n") + "\n"
    }
}

impl fmt::Display for Homography {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_text().trim_end())
    }
}

impl FromStr for Homography {
    type Err = Error;

    /// Parses nine whitespace-separated numbers in row-major order.
    fn from_str(s: &str) -> Result<Self> {
        let vals = s
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("not a number: {t:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if vals.len() != 9 {
            return Err(Error::InvalidInput(format!(
                "homography needs 9 numbers, got {}",
                vals.len()
            )));
        }
        Homography::from_matrix([
            [vals[0], vals[1], vals[2]],
            [vals[3], vals[4], vals[5]],
            [vals[6], vals[7], vals[8]],
        ])
    }
}

impl Serialize for Homography {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.matrix().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Homography {
    /// Accepts a 3×3 nested array, a flat list of 8 or 9 numbers, or the
    /// nine-number text form as a string.
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Nested([[f64; 3]; 3]),
            Flat(Vec<f64>),
            Text(String),
        }
        let m = match Repr::deserialize(deserializer)? {
            Repr::Text(t) => return t.parse().map_err(serde::de::Error::custom),
            Repr::Nested(m) => m,
            Repr::Flat(v) if v.len() == 8 => [[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], 1.0]],
            Repr::Flat(v) if v.len() == 9 => [[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]],
            Repr::Flat(v) => {
                return Err(serde::de::Error::custom(format!(
                    "homography needs 8 or 9 numbers, got {}",
                    v.len()
                )))
            }
        };
        Homography::from_matrix(m).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn adjugate(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    [
        [
            m[1][1] * m[2][2] - m[1][2] * m[2][1],
            m[0][2] * m[2][1] - m[0][1] * m[2][2],
            m[0][1] * m[1][2] - m[0][2] * m[1][1],
        ],
        [
            m[1][2] * m[2][0] - m[1][0] * m[2][2],
            m[0][0] * m[2][2] - m[0][2] * m[2][0],
            m[0][2] * m[1][0] - m[0][0] * m[1][2],
        ],
        [
            m[1][0] * m[2][1] - m[1][1] * m[2][0],
            m[0][1] * m[2][0] - m[0][0] * m[2][1],
            m[0][0] * m[1][1] - m[0][1] * m[1][0],
        ],
    ]
}

pub(crate) fn frobenius(m: &[[f64; 3]; 3]) -> f64 {
    m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

/// Intersection of the line through `a` with direction `da` and the line
/// through `b` with direction `db`.
pub fn intersect_lines(a: Point, da: Direction, b: Point, db: Direction, tol: f64) -> Option<Point> {
    let denom = da.cross(db);
    let n = da.norm() * db.norm();
    if !(denom.abs() > tol * n) {
        return None;
    }
    let s = (b - a).cross(db.as_point()) / denom;
    Some(a + da.as_point() * s)
}
