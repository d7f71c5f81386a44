//! Text emitters for mesh and scale-profile figures. Output is plain SVG/CSV
//! with numbers at 12 significant digits, so files are byte-stable.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{Homography, Point};
use crate::quasi::{QuasiHomography, WarpedMesh};
use crate::warp::{HomographyWarp, Warp};

const SIG_DIGITS: i32 = 12;
const CURVE_OVERSAMPLE: usize = 8;

/// `v` rounded to 12 significant digits, without trailing zeros.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v == 0.0 { "0".into() } else { format!("{v}") };
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-5..15).contains(&exp) {
        let s = format!("{:.*e}", (SIG_DIGITS - 1) as usize, v);
        let (mant, e) = s.split_once('e').expect("exponent form");
        return format!("{}e{}", trim_zeros(mant), e);
    }
    let decimals = (SIG_DIGITS - 1 - exp).max(0) as usize;
    let s = trim_zeros(&format!("{v:.decimals$}")).to_string();
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| if n == 1 { a } else { a + (b - a) * i as f64 / (n - 1) as f64 })
}

/// Sampling grid for mesh figures, in source coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshGrid {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub steps: (usize, usize),
}

#[derive(Debug, Clone)]
pub struct MeshPanel {
    pub name: &'static str,
    pub mesh: WarpedMesh,
    /// Image of the horizon row, split where the map is undefined.
    pub horizon: Vec<Vec<Point>>,
    /// Image of the partition column.
    pub partition: Vec<Vec<Point>>,
}

#[derive(Debug, Clone)]
pub struct MeshFigure {
    pub grid: MeshGrid,
    pub y_star: Option<f64>,
    pub x_star: Option<f64>,
    pub panels: Vec<MeshPanel>,
}

fn curve(warp: &dyn Warp, pts: impl Iterator<Item = Point>) -> Vec<Vec<Point>> {
    let mut out: Vec<Vec<Point>> = vec![Vec::new()];
    for p in pts {
        match warp.forward(p).ok().filter(|q| q.is_finite()) {
            Some(q) => out.last_mut().expect("non-empty").push(q),
            None if out.last().is_some_and(|s| !s.is_empty()) => out.push(Vec::new()),
            None => {}
        }
    }
    out.retain(|s| s.len() >= 2);
    out
}

impl MeshFigure {
    /// The `H0` mesh, plus the quasi-homography mesh beside it when `x_star`
    /// is given.
    pub fn build(h: &Homography, x_star: Option<f64>, grid: MeshGrid) -> Result<Self> {
        let hw = HomographyWarp::new(*h)?;
        let quasi = x_star.map(|xs| QuasiHomography::build(*h, xs)).transpose()?;
        let y_star = match quasi {
            Some(q) => Some(q.y_star()),
            None => h.horizon_row().ok(),
        };
        let (cols, rows) = grid.steps;
        let panel = |name, warp: &dyn Warp| -> Result<MeshPanel> {
            let mesh = WarpedMesh::sample(warp, grid.x_range, grid.y_range, grid.steps)?;
            let in_y = |y: f64| y >= grid.y_range.0.min(grid.y_range.1) && y <= grid.y_range.0.max(grid.y_range.1);
            let in_x = |x: f64| x >= grid.x_range.0.min(grid.x_range.1) && x <= grid.x_range.0.max(grid.x_range.1);
            let horizon = match y_star.filter(|&y| in_y(y)) {
                Some(y) => curve(
                    warp,
                    linspace(grid.x_range.0, grid.x_range.1, CURVE_OVERSAMPLE * (cols - 1) + 1).map(|x| Point::new(x, y)),
                ),
                None => Vec::new(),
            };
            let partition = match x_star.filter(|&x| in_x(x)) {
                Some(x) => curve(
                    warp,
                    linspace(grid.y_range.0, grid.y_range.1, CURVE_OVERSAMPLE * (rows - 1) + 1).map(|y| Point::new(x, y)),
                ),
                None => Vec::new(),
            };
            Ok(MeshPanel { name, mesh, horizon, partition })
        };
        let mut panels = vec![panel("homography", &hw)?];
        if let Some(q) = &quasi {
            panels.push(panel("quasi", q)?);
        }
        Ok(MeshFigure { grid, y_star, x_star, panels })
    }

    fn bounds(&self) -> Result<(Point, Point)> {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in self.panels.iter().flat_map(|p| p.mesh.image_points.iter().flatten()) {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        if !(lo.x <= hi.x && lo.y <= hi.y) {
            return Err(Error::UnboundedWarp("no mesh node has a finite image".into()));
        }
        Ok((lo, hi))
    }

    pub fn to_svg(&self) -> Result<String> {
        let (lo, hi) = self.bounds()?;
        let bw = (hi.x - lo.x).max(1.0);
        let bh = (hi.y - lo.y).max(1.0);
        let pad = 0.05 * bw.max(bh);
        let label = 0.06 * bw.max(bh);
        let sw = bw.max(bh) / 500.0;
        let n = self.panels.len() as f64;
        let width = n * (bw + 2.0 * pad);
        let height = bh + 2.0 * pad + label;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {} {}" width="{}" height="{}">"#,
            fmt_sig(width),
            fmt_sig(height),
            fmt_sig(width),
            fmt_sig(height)
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        for (k, panel) in self.panels.iter().enumerate() {
            let tx = k as f64 * (bw + 2.0 * pad) + pad - lo.x;
            let ty = label + pad - lo.y;
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-family="monospace" font-size="{}">{}</text>"#,
                fmt_sig(k as f64 * (bw + 2.0 * pad) + pad),
                fmt_sig(0.75 * label),
                fmt_sig(0.5 * label),
                panel.name
            );
            let _ = writeln!(s, r#"<g id="{}" transform="translate({} {})">"#, panel.name, fmt_sig(tx), fmt_sig(ty));
            let m = &panel.mesh;
            let _ = writeln!(s, r##"<g class="rows" fill="none" stroke="#444" stroke-width="{}">"##, fmt_sig(sw));
            for r in 0..m.rows {
                write_polylines(&mut s, (0..m.cols).map(|c| m.image(c, r)));
            }
            s.push_str("</g>\n");
            let _ = writeln!(s, r##"<g class="cols" fill="none" stroke="#444" stroke-width="{}">"##, fmt_sig(sw));
            for c in 0..m.cols {
                write_polylines(&mut s, (0..m.rows).map(|r| m.image(c, r)));
            }
            s.push_str("</g>\n");
            if !panel.horizon.is_empty() {
                let _ = writeln!(s, r##"<g class="horizon" fill="none" stroke="#d00000" stroke-width="{}">"##, fmt_sig(2.0 * sw));
                for seg in &panel.horizon {
                    write_polylines(&mut s, seg.iter().map(|&p| Some(p)));
                }
                s.push_str("</g>\n");
            }
            if !panel.partition.is_empty() {
                let _ = writeln!(
                    s,
                    r##"<g class="partition" fill="none" stroke="#0060c0" stroke-width="{}" stroke-dasharray="{} {}">"##,
                    fmt_sig(2.0 * sw),
                    fmt_sig(8.0 * sw),
                    fmt_sig(4.0 * sw)
                );
                for seg in &panel.partition {
                    write_polylines(&mut s, seg.iter().map(|&p| Some(p)));
                }
                s.push_str("</g>\n");
            }
            s.push_str("</g>\n");
        }
        let mut notes = Vec::new();
        if let Some(y) = self.y_star {
            notes.push(format!("y* = {}", fmt_sig(y)));
        }
        if let Some(x) = self.x_star {
            notes.push(format!("x* = {}", fmt_sig(x)));
        }
        if !notes.is_empty() {
            let _ = writeln!(
                s,
                r##"<text class="annotation" x="{}" y="{}" font-family="monospace" font-size="{}" fill="#d00000">{}</text>"##,
                fmt_sig(width - pad),
                fmt_sig(0.75 * label),
                fmt_sig(0.4 * label),
                notes.join(", ")
            );
        }
        s.push_str("</svg>\n");
        Ok(s)
    }
}

/// One `<polyline>` per run of defined points.
fn write_polylines(s: &mut String, pts: impl Iterator<Item = Option<Point>>) {
    let mut run: Vec<Point> = Vec::new();
    let flush = |run: &mut Vec<Point>, s: &mut String| {
        if run.len() >= 2 {
            let coords: Vec<String> = run.iter().map(|p| format!("{},{}", fmt_sig(p.x), fmt_sig(p.y))).collect();
            let _ = writeln!(s, r#"<polyline points="{}"/>"#, coords.join(" "));
        }
        run.clear();
    };
    for p in pts {
        match p {
            Some(p) => run.push(p),
            None => flush(&mut run, s),
        }
    }
    flush(&mut run, s);
}

/// `f0(x, y*)` and `f†(x, y*)` sampled over an x-range.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleSeries {
    pub row: f64,
    pub x_star: f64,
    pub xs: Vec<f64>,
    pub f0: Vec<Option<f64>>,
    pub f_dagger: Vec<Option<f64>>,
    /// Set when the quasi-homography coincides with the homography.
    pub note: Option<String>,
}

impl ScaleSeries {
    /// With `h7 = 0` every row of `H0` already scales linearly; the profile
    /// is then taken along `fallback_row` and both curves coincide.
    pub fn build(h: &Homography, x_star: f64, x_range: (f64, f64), samples: usize, fallback_row: f64) -> Result<Self> {
        if samples < 2 {
            return Err(Error::InvalidInput("scale profile needs at least 2 samples".into()));
        }
        let xs: Vec<f64> = linspace(x_range.0, x_range.1, samples).collect();
        let f0_at = |row: f64| -> Vec<Option<f64>> {
            xs.iter().map(|&x| h.apply(Point::new(x, row)).ok().map(|p| p.x)).collect()
        };
        if h.params()[6] == 0.0 {
            let f0 = f0_at(fallback_row);
            return Ok(ScaleSeries {
                row: fallback_row,
                x_star,
                xs,
                f_dagger: f0.clone(),
                f0,
                note: Some("h7 = 0: f0 is linear in x on every row, so the quasi-homography equals the homography".into()),
            });
        }
        let q = QuasiHomography::build(*h, x_star)?;
        let f0 = f0_at(q.y_star());
        let f_dagger = xs.iter().map(|&x| q.f_dagger(x).ok()).collect();
        Ok(ScaleSeries {
            row: q.y_star(),
            x_star,
            xs,
            f0,
            f_dagger,
            note: None,
        })
    }

    /// Three columns: `x`, `f0`, `f_dagger`; undefined values are empty.
    pub fn to_csv(&self) -> String {
        let cell = |v: Option<f64>| v.map(fmt_sig).unwrap_or_default();
        let mut s = String::from("x,f0,f_dagger\n");
        for ((&x, &a), &b) in self.xs.iter().zip(&self.f0).zip(&self.f_dagger) {
            let _ = writeln!(s, "{},{},{}", fmt_sig(x), cell(a), cell(b));
        }
        s
    }

    pub fn to_svg(&self) -> String {
        const W: f64 = 640.0;
        const H: f64 = 400.0;
        const M: f64 = 48.0;
        let (x0, x1) = (self.xs[0], *self.xs.last().expect("samples"));
        let ys = self.f0.iter().chain(&self.f_dagger).flatten();
        let (mut y0, mut y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if !(y0 <= y1) {
            (y0, y1) = (0.0, 1.0);
        }
        if y1 - y0 < 1e-12 {
            y1 = y0 + 1.0;
        }
        let dx = if x1 > x0 { x1 - x0 } else { 1.0 };
        let px = |x: f64| M + (x - x0) / dx * (W - 2.0 * M);
        let py = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
        let series = |vals: &[Option<f64>]| -> Vec<Option<Point>> {
            self.xs.iter().zip(vals).map(|(&x, v)| v.map(|y| Point::new(px(x), py(y)))).collect()
        };

        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {W} {H}" width="{W}" height="{H}">"#);
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r##"<rect x="{M}" y="{M}" width="{}" height="{}" fill="none" stroke="#888"/>"##,
            W - 2.0 * M,
            H - 2.0 * M
        );
        if self.x_star >= x0.min(x1) && self.x_star <= x0.max(x1) {
            let x = fmt_sig(px(self.x_star));
            let _ = writeln!(
                s,
                r##"<line class="partition" x1="{x}" y1="{M}" x2="{x}" y2="{}" stroke="#0060c0" stroke-dasharray="6 3"/>"##,
                H - M
            );
            let _ = writeln!(
                s,
                r##"<text x="{x}" y="{}" font-family="monospace" font-size="12" fill="#0060c0">x* = {}</text>"##,
                M - 6.0,
                fmt_sig(self.x_star)
            );
        }
        s.push_str(r##"<g class="f0" fill="none" stroke="#888" stroke-width="2" stroke-dasharray="4 2">"##);
        s.push('\n');
        write_polylines(&mut s, series(&self.f0).into_iter());
        s.push_str("</g>\n");
        s.push_str(r##"<g class="f_dagger" fill="none" stroke="#d00000" stroke-width="1.5">"##);
        s.push('\n');
        write_polylines(&mut s, series(&self.f_dagger).into_iter());
        s.push_str("</g>\n");
        let _ = writeln!(
            s,
            r#"<text x="{M}" y="{}" font-family="monospace" font-size="12">x: [{}, {}]  f: [{}, {}]  row y = {}</text>"#,
            H - M + 20.0,
            fmt_sig(x0),
            fmt_sig(x1),
            fmt_sig(y0),
            fmt_sig(y1),
            fmt_sig(self.row)
        );
        if let Some(note) = &self.note {
            let _ = writeln!(s, r#"<text x="{M}" y="{}" font-family="monospace" font-size="12">{note}</text>"#, H - M + 36.0);
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn running() -> Homography {
        Homography::new([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.001, 0.0]).unwrap()
    }

    #[test]
    fn formatting_keeps_twelve_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(-0.0), "0");
        assert_eq!(fmt_sig(1.5), "1.5");
        assert_eq!(fmt_sig(-200.0), "-200");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(123456.7890123456), "123456.789012");
        assert_eq!(fmt_sig(2.5e-9), "2.5e-9");
        let v = 0.123456789012345;
        assert!((fmt_sig(v).parse::<f64>().unwrap() - v).abs() < 1e-12);
    }

    fn parse_polylines(svg: &str, group: &str) -> Vec<Vec<(f64, f64)>> {
        let start = svg.find(&format!("<g class=\"{group}\"")).unwrap();
        let end = start + svg[start..].find("</g>").unwrap();
        svg[start..end]
            .split("points=\"")
            .skip(1)
            .map(|chunk| {
                chunk[..chunk.find('"').unwrap()]
                    .split(' ')
                    .map(|pair| {
                        let (a, b) = pair.split_once(',').unwrap();
                        (a.parse().unwrap(), b.parse().unwrap())
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn mesh_nodes_match_library_mesh() {
        let grid = MeshGrid { x_range: (-200.0, 800.0), y_range: (-300.0, 300.0), steps: (10, 10) };
        let fig = MeshFigure::build(&running(), Some(0.0), grid).unwrap();
        assert_eq!(fig.y_star, Some(0.0));
        let svg = fig.to_svg().unwrap();
        assert!(svg.contains("y* = 0"));
        assert!(svg.contains("#d00000"));
        let q = QuasiHomography::build(running(), 0.0).unwrap();
        let oracle = q.mesh(grid.x_range, grid.y_range, grid.steps).unwrap();
        // Second panel's row family.
        let quasi_part = &svg[svg.find("<g id=\"quasi\"").unwrap()..];
        let rows = parse_polylines(quasi_part, "rows");
        assert_eq!(rows.len(), 10);
        for (r, line) in rows.iter().enumerate() {
            for (c, &(x, y)) in line.iter().enumerate() {
                let p = oracle.image(c, r).unwrap();
                assert!((x - p.x).abs() <= 1e-11 * p.x.abs().max(1.0), "{x} vs {}", p.x);
                assert!((y - p.y).abs() <= 1e-11 * p.y.abs().max(1.0), "{y} vs {}", p.y);
            }
        }
        let horizon = parse_polylines(quasi_part, "horizon");
        assert!(horizon.iter().flatten().all(|&(_, y)| y.abs() < 1e-9));
    }

    #[test]
    fn identity_homography_mesh_is_regular() {
        let grid = MeshGrid { x_range: (0.0, 90.0), y_range: (0.0, 90.0), steps: (10, 10) };
        let fig = MeshFigure::build(&Homography::identity(), None, grid).unwrap();
        assert_eq!(fig.panels.len(), 1);
        let svg = fig.to_svg().unwrap();
        let rows = parse_polylines(&svg, "rows");
        for (r, line) in rows.iter().enumerate() {
            for (c, &(x, y)) in line.iter().enumerate() {
                assert_eq!((x, y), (10.0 * c as f64, 10.0 * r as f64));
            }
        }
    }

    #[test]
    fn affine_quasi_mesh_is_rejected() {
        let h = Homography::new([1.0, 0.1, 5.0, 0.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        let grid = MeshGrid { x_range: (0.0, 10.0), y_range: (0.0, 10.0), steps: (3, 3) };
        assert!(matches!(MeshFigure::build(&h, Some(5.0), grid), Err(Error::AffineDegenerate)));
    }

    #[test]
    fn scale_curves_coincide_left_and_are_linear_right() {
        let s = ScaleSeries::build(&running(), 0.0, (-200.0, 800.0), 101, 0.0).unwrap();
        let csv = s.to_csv();
        let rows: Vec<[f64; 3]> = csv
            .lines()
            .skip(1)
            .map(|l| {
                let v: Vec<f64> = l.split(',').map(|c| c.parse().unwrap()).collect();
                [v[0], v[1], v[2]]
            })
            .collect();
        assert_eq!(rows.len(), 101);
        for r in rows.iter().filter(|r| r[0] <= 0.0) {
            assert_eq!(r[1], r[2]);
        }
        let tail: Vec<f64> = rows.iter().filter(|r| r[0] >= 0.0).map(|r| r[2]).collect();
        for w in tail.windows(3) {
            assert!((w[2] - 2.0 * w[1] + w[0]).abs() < 1e-8);
        }
        // The homography branch bends over the same grid.
        let bend = rows
            .windows(3)
            .filter(|w| w[0][0] >= 0.0)
            .map(|w| (w[2][1] - 2.0 * w[1][1] + w[0][1]).abs())
            .fold(0.0, f64::max);
        assert!(bend > 1e-3);
        assert!(s.to_svg().contains("x* = 0"));
    }

    #[test]
    fn scale_range_left_of_partition_is_identical() {
        let s = ScaleSeries::build(&running(), 500.0, (-200.0, 400.0), 31, 0.0).unwrap();
        assert_eq!(s.f0, s.f_dagger);
    }

    #[test]
    fn scale_without_h7_is_a_single_line() {
        let h = Homography::new([1.1, 0.0, 3.0, 0.0, 1.0, 0.0, 0.0, 1e-4]).unwrap();
        let s = ScaleSeries::build(&h, 0.0, (0.0, 100.0), 11, 0.0).unwrap();
        assert_eq!(s.f0, s.f_dagger);
        assert!(s.note.is_some());
        assert!(s.to_svg().contains("equals the homography"));
    }
}
