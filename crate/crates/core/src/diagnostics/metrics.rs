//! Distortion measures for comparing warps over a region.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::quasi::WarpedMesh;
use crate::warp::Warp;

/// Axis-aligned sampling region in source coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Region {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistortionMetrics {
    /// Max |second difference| of the mapped abscissa along the measured row.
    pub scale_nonlinearity: f64,
    /// Max sine between a mapped row/column sample chord and the chord
    /// spanning the whole mapped row/column.
    pub slope_deviation: f64,
    pub fold_count: usize,
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| if n == 1 { a } else { a + (b - a) * i as f64 / (n - 1) as f64 })
}

/// Values `f(x, y)` (mapped abscissa) on `n` uniform samples of `[x0, x1]`.
pub fn row_profile(warp: &dyn Warp, y: f64, x0: f64, x1: f64, n: usize) -> Result<Vec<(f64, f64)>> {
    linspace(x0, x1, n)
        .map(|x| Ok((x, warp.forward(Point::new(x, y))?.x)))
        .collect()
}

pub fn scale_nonlinearity(warp: &dyn Warp, y: f64, x0: f64, x1: f64, n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidInput("scale profile needs at least 3 samples".into()));
    }
    let f = row_profile(warp, y, x0, x1, n)?;
    Ok(f.windows(3)
        .map(|w| (w[2].1 - 2.0 * w[1].1 + w[0].1).abs())
        .fold(0.0, f64::max))
}

/// Collinearity residual of mapped points: max over interior samples of the
/// sine between `p_k - p_0` and `p_last - p_0`.
pub fn collinearity_residual(points: &[Point]) -> f64 {
    let (Some(&first), Some(&last)) = (points.first(), points.last()) else {
        return 0.0;
    };
    let chord = last - first;
    points[1..points.len().saturating_sub(1)]
        .iter()
        .map(|&p| {
            let v = p - first;
            let den = v.norm() * chord.norm();
            if den == 0.0 {
                0.0
            } else {
                (v.cross(chord) / den).abs()
            }
        })
        .fold(0.0, f64::max)
}

pub fn slope_deviation(warp: &dyn Warp, region: Region, n: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for y in linspace(region.y_range.0, region.y_range.1, n) {
        let pts: Vec<Point> = linspace(region.x_range.0, region.x_range.1, n)
            .map(|x| warp.forward(Point::new(x, y)))
            .collect::<Result<_>>()?;
        worst = worst.max(collinearity_residual(&pts));
    }
    for x in linspace(region.x_range.0, region.x_range.1, n) {
        let pts: Vec<Point> = linspace(region.y_range.0, region.y_range.1, n)
            .map(|y| warp.forward(Point::new(x, y)))
            .collect::<Result<_>>()?;
        worst = worst.max(collinearity_residual(&pts));
    }
    Ok(worst)
}

/// All three measures over `region` with an `n × n` sample grid; scale is
/// measured along row `row_y`.
pub fn measure(warp: &dyn Warp, region: Region, row_y: f64, n: usize) -> Result<DistortionMetrics> {
    let mesh = WarpedMesh::sample(warp, region.x_range, region.y_range, (n, n))?;
    Ok(DistortionMetrics {
        scale_nonlinearity: scale_nonlinearity(warp, row_y, region.x_range.0, region.x_range.1, n)?,
        slope_deviation: slope_deviation(warp, region, n)?,
        fold_count: mesh.fold_count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Homography;
    use crate::quasi::QuasiHomography;

    fn running_example() -> Homography {
        Homography::new([0.9, 0.02, 420.0, -0.03, 1.0, 10.0, 2.5e-4, 1e-5]).unwrap()
    }

    #[test]
    fn quasi_is_linear_and_straight_beyond_partition() {
        let q = QuasiHomography::build(running_example(), 300.0).unwrap();
        let region = Region { x_range: (300.0, 800.0), y_range: (0.0, 600.0) };
        let m = measure(&q, region, q.y_star(), 51).unwrap();
        assert!(m.scale_nonlinearity < 1e-10, "{}", m.scale_nonlinearity);
        assert!(m.slope_deviation < 1e-9, "{}", m.slope_deviation);
        assert_eq!(m.fold_count, 0);
    }

    #[test]
    fn homography_scale_is_nonlinear() {
        let h = running_example();
        let y = h.horizon_row().unwrap();
        // Oracle: second difference of the closed-form f0 with unit steps.
        let f = |x: f64| {
            let [h1, h2, h3, _, _, _, h7, h8] = h.params();
            (h1 * x + h2 * y + h3) / (h7 * x + h8 * y + 1.0)
        };
        let expect = (300..800).map(|x| (f(x as f64 + 2.0) - 2.0 * f(x as f64 + 1.0) + f(x as f64)).abs()).fold(0.0, f64::max);
        let got = scale_nonlinearity(&h, y, 300.0, 801.0, 502).unwrap();
        assert!((got - expect).abs() < 1e-9);
        assert!(got > 1e-6);
    }

    #[test]
    fn identity_scores_zero() {
        let region = Region { x_range: (0.0, 100.0), y_range: (0.0, 80.0) };
        let m = measure(&Homography::identity(), region, 40.0, 11).unwrap();
        assert_eq!(m, DistortionMetrics { scale_nonlinearity: 0.0, slope_deviation: 0.0, fold_count: 0 });
    }
}
