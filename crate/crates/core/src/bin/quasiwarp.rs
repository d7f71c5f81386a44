use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use quasiwarp::compositing::{canvas_bounds, warp_image, Raster};
use quasiwarp::config::RunConfig;
use quasiwarp::diagnostics::{measure, MeshFigure, MeshGrid, Region, ScaleSeries};
use quasiwarp::estimation::{detect_and_match, estimate_rectified, inlier_rms, ransac, CorrespondenceSet, MatchOptions};
use quasiwarp::pipeline::{default_reference, stitch_pair, stitch_sequence, Stage, Stitched, WarpMode};
use quasiwarp::{Error, Homography, Point, QuasiHomography, Result, Warp};

#[derive(Parser)]
#[command(name = "quasiwarp", version, about = "Quasi-homography warping and image stitching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stitch a target image onto a reference image.
    Stitch(StitchArgs),
    /// Stitch a left-to-right sequence of images.
    StitchMulti(StitchMultiArgs),
    /// Estimate a homography from correspondences.
    Estimate(EstimateArgs),
    /// Warp one image, or map individual points.
    Warp(WarpArgs),
    /// Side-by-side SVG meshes of a homography and its quasi-homography.
    DiagnoseMesh(MeshArgs),
    /// CSV and SVG of the scale functions along the horizon row.
    DiagnoseScale(ScaleArgs),
    /// Distortion metrics of a warp over a region, as JSON.
    Metrics(MetricsArgs),
}

#[derive(Args, Clone)]
struct CommonStitch {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Warp for the target: quasi (default) or homography.
    #[arg(long)]
    mode: Option<WarpMode>,
    /// Keep the target's outer border vertical during estimation.
    #[arg(long)]
    rectify: bool,
    /// Move the partition to the outer extent of a provisional seam.
    #[arg(long)]
    refine_partition: bool,
    /// Feather width in pixels across the seam (0 for a hard cut).
    #[arg(long)]
    feather: Option<usize>,
    /// RANSAC seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Disable the plain-homography fallback for affine estimates.
    #[arg(long)]
    no_fallback: bool,
    /// Detect and match features when no correspondences are given.
    #[arg(long)]
    detect: bool,
    /// Leave wall-clock timings out of the report so it is byte-stable.
    #[arg(long)]
    omit_timings: bool,
    /// Mosaic PNG.
    #[arg(long)]
    out: PathBuf,
    /// Label PNG [default: <out>_labels.png].
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Seam JSON [default: <out>_seam.json].
    #[arg(long)]
    seam: Option<PathBuf>,
    /// Report JSON [default: <out>_report.json].
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct StitchArgs {
    /// Image warped onto the reference.
    #[arg(long)]
    target: PathBuf,
    /// Reference image; the mosaic is expressed in its frame.
    #[arg(long = "ref")]
    reference: PathBuf,
    /// JSON-lines correspondences, target points as source.
    #[arg(long, conflicts_with = "corrs_csv")]
    corrs: Option<PathBuf>,
    /// Row-aligned CSV point files: target then reference.
    #[arg(long, num_args = 2, value_names = ["TARGET_CSV", "REF_CSV"])]
    corrs_csv: Option<Vec<PathBuf>>,
    #[command(flatten)]
    common: CommonStitch,
}

#[derive(Args)]
struct StitchMultiArgs {
    /// Images in left-to-right order.
    #[arg(long, num_args = 2.., required = true)]
    images: Vec<PathBuf>,
    /// One JSON-lines file per adjacent pair, mapping image k to image k+1.
    #[arg(long, num_args = 1..)]
    corrs: Vec<PathBuf>,
    /// Reference image index [default: middle].
    #[arg(long)]
    ref_index: Option<usize>,
    #[command(flatten)]
    common: CommonStitch,
}

#[derive(Args)]
struct CorrsSource {
    #[arg(long, conflicts_with = "corrs_csv")]
    corrs: Option<PathBuf>,
    #[arg(long, num_args = 2, value_names = ["SOURCE_CSV", "DEST_CSV"])]
    corrs_csv: Option<Vec<PathBuf>>,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    source: CorrsSource,
    /// Detect correspondences between these two images (source, dest).
    #[arg(long, num_args = 2, value_names = ["SOURCE", "DEST"])]
    detect: Option<Vec<PathBuf>>,
    /// Constrain the border x = width to stay vertical.
    #[arg(long, requires_all = ["width", "height"])]
    rectify: bool,
    #[arg(long)]
    width: Option<f64>,
    #[arg(long)]
    height: Option<f64>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// RANSAC seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Homography text file [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Estimation summary JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct WarpSource {
    /// Homography text file (nine numbers, row-major).
    #[arg(long)]
    homography: Option<PathBuf>,
    /// JSON run configuration providing `homography`, `x_star` and section defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Estimate the homography from these correspondences instead.
    #[arg(long, conflicts_with = "homography")]
    corrs: Option<PathBuf>,
    #[arg(long, default_value = "quasi")]
    mode: WarpMode,
    #[arg(long, allow_hyphen_values = true)]
    x_star: Option<f64>,
}

#[derive(Args)]
struct WarpArgs {
    #[command(flatten)]
    source: WarpSource,
    #[arg(long, requires = "out")]
    image: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Points to map forward and backward, as `x,y`.
    #[arg(long = "point", allow_hyphen_values = true, value_parser = parse_pair)]
    points: Vec<(f64, f64)>,
}

#[derive(Args)]
struct MeshArgs {
    #[command(flatten)]
    source: WarpSource,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_pair)]
    x_range: Option<(f64, f64)>,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_pair)]
    y_range: Option<(f64, f64)>,
    /// Grid nodes per axis, `COLSxROWS`.
    #[arg(long, value_parser = parse_steps)]
    steps: Option<(usize, usize)>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScaleArgs {
    #[command(flatten)]
    source: WarpSource,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_pair)]
    x_range: Option<(f64, f64)>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    svg: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    #[command(flatten)]
    source: WarpSource,
    /// `x0,x1,y0,y1` in source coordinates [default: right of x* to the config region's edge].
    #[arg(long, allow_hyphen_values = true, value_parser = parse_region)]
    region: Option<[f64; 4]>,
    #[arg(long)]
    samples: Option<usize>,
    /// Row for the scale measure [default: the horizon row].
    #[arg(long, allow_hyphen_values = true)]
    row: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_numbers(s: &str, n: usize) -> std::result::Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("not a number: {t:?}")))
        .collect::<std::result::Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated numbers"));
    }
    Ok(v)
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    parse_numbers(s, 2).map(|v| (v[0], v[1]))
}

fn parse_region(s: &str) -> std::result::Result<[f64; 4], String> {
    parse_numbers(s, 4).map(|v| [v[0], v[1], v[2], v[3]])
}

fn parse_steps(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once('x').ok_or("expected COLSxROWS")?;
    Ok((a.parse().map_err(|_| "bad column count")?, b.parse().map_err(|_| "bad row count")?))
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    path.map_or_else(|| Ok(RunConfig::default()), RunConfig::read)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_corrs(path: &Path) -> Result<CorrespondenceSet> {
    if !path.exists() {
        return Err(Error::InputMissing(format!("correspondence file {}", path.display())));
    }
    CorrespondenceSet::read_jsonl(path)
}

fn read_image(path: &Path) -> Result<Raster> {
    if !path.exists() {
        return Err(Error::InputMissing(format!("image {}", path.display())));
    }
    Raster::read(path)
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}{suffix}"))
}

/// Config file values overridden by flags.
fn stitch_config(c: &CommonStitch) -> Result<RunConfig> {
    let mut cfg = load_config(c.config.as_deref())?;
    let o = &mut cfg.stitch;
    if let Some(m) = c.mode {
        o.mode = m;
    }
    o.rectify |= c.rectify;
    o.refine_partition |= c.refine_partition;
    if let Some(f) = c.feather {
        o.feather_px = f;
    }
    if let Some(s) = c.seed {
        o.ransac.seed = s;
    }
    if c.no_fallback {
        o.fallback_to_homography = false;
    }
    o.validate()?;
    Ok(cfg)
}

fn write_outputs(mut out: Stitched, c: &CommonStitch, cfg: &RunConfig) -> Result<()> {
    out.mosaic.canvas.write(&c.out)?;
    out.mosaic.write_labels(&c.labels.clone().unwrap_or_else(|| sibling(&c.out, "_labels.png")))?;
    out.mosaic.write_seam(&c.seam.clone().unwrap_or_else(|| sibling(&c.out, "_seam.json")))?;
    if c.omit_timings {
        out.report.timings = None;
    }
    out.report.config = Some(cfg.to_value());
    write_text(&c.report.clone().unwrap_or_else(|| sibling(&c.out, "_report.json")), &out.report.to_json())
}

fn cmd_stitch(a: StitchArgs) -> Result<()> {
    let cfg = stitch_config(&a.common)?;
    let corrs = match (&a.corrs, &a.corrs_csv) {
        (Some(p), _) => Some(read_corrs(p)?),
        (None, Some(files)) => {
            for f in files {
                if !f.exists() {
                    return Err(Error::InputMissing(format!("correspondence file {}", f.display())));
                }
            }
            Some(CorrespondenceSet::read_csv_pair(&files[0], &files[1])?)
        }
        (None, None) if a.common.detect => None,
        (None, None) => return Err(Error::InputMissing("no correspondences given; pass --corrs, --corrs-csv or --detect".into())),
    };
    let target = read_image(&a.target)?;
    let reference = read_image(&a.reference)?;
    let out = stitch_pair(&target, &reference, corrs.as_ref(), &cfg.stitch)?;
    write_outputs(out, &a.common, &cfg)
}

fn cmd_stitch_multi(a: StitchMultiArgs) -> Result<()> {
    let mut cfg = stitch_config(&a.common)?;
    let n = a.images.len();
    let corrs: Vec<Option<CorrespondenceSet>> = if a.corrs.is_empty() {
        if !a.common.detect {
            return Err(Error::InputMissing("no correspondences given; pass --corrs or --detect".into()));
        }
        vec![None; n - 1]
    } else {
        a.corrs.iter().map(|p| read_corrs(p).map(Some)).collect::<Result<_>>()?
    };
    let images: Vec<Raster> = a.images.iter().map(|p| read_image(p)).collect::<Result<_>>()?;
    let r = a.ref_index.or(cfg.reference_index).unwrap_or_else(|| default_reference(n));
    cfg.reference_index = Some(r);
    let out = stitch_sequence(&images, &corrs, r, &cfg.stitch)?;
    write_outputs(out, &a.common, &cfg)
}

fn cmd_estimate(a: EstimateArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let mut params = cfg.stitch.ransac;
    if let Some(s) = a.seed {
        params.seed = s;
    }
    params.validate()?;
    let corrs = match (&a.source.corrs, &a.source.corrs_csv, &a.detect) {
        (Some(p), _, _) => read_corrs(p)?,
        (None, Some(f), _) => CorrespondenceSet::read_csv_pair(&f[0], &f[1])?,
        (None, None, Some(imgs)) => detect_and_match(&read_image(&imgs[0])?, &read_image(&imgs[1])?, &MatchOptions::default())?,
        (None, None, None) => return Err(Error::InputMissing("no correspondences given; pass --corrs, --corrs-csv or --detect".into())),
    };
    let r = ransac(&corrs, &params)?;
    let h = match (a.rectify, a.width, a.height) {
        (true, Some(w), Some(hh)) => estimate_rectified(&corrs, w, hh, &params)?,
        _ => r.homography,
    };
    let text = h.to_text();
    match &a.out {
        Some(p) => write_text(p, &text)?,
        None => print!("{text}"),
    }
    if let Some(p) = &a.report {
        let summary = json!({
            "homography": h.params(),
            "correspondences": corrs.len(),
            "inliers": r.inlier_count(),
            "inlier_rms": inlier_rms(&h, &corrs, &r.inlier_mask),
            "ransac_iterations": r.iterations,
            "rectified": a.rectify,
            "horizon_row": h.horizon_row().ok(),
        });
        write_text(p, &(serde_json::to_string_pretty(&summary)? + "\n"))?;
    }
    Ok(())
}

/// Homography from a flag, a config file, or estimated correspondences.
fn resolve_homography(s: &WarpSource, cfg: &RunConfig) -> Result<Homography> {
    if let Some(p) = &s.homography {
        let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        return text.parse();
    }
    if let Some(p) = &s.corrs {
        return Ok(ransac(&read_corrs(p)?, &cfg.stitch.ransac)?.homography);
    }
    cfg.homography
        .ok_or_else(|| Error::InputMissing("no homography given; pass --homography, --corrs or a config with `homography`".into()))
}

fn guidance(e: Error) -> Error {
    if matches!(e, Error::AffineDegenerate) {
        eprintln!(
            "hint: h4 h8 = h5 h7, so no row of the image stays horizontal and the quasi-homography is undefined; \
             an affine map is already linear along rows, use --mode homography"
        );
    }
    e
}

fn build_stage(s: &WarpSource, cfg: &RunConfig, default_x_star: f64) -> Result<(Stage, Homography, Option<f64>)> {
    let h = resolve_homography(s, cfg)?;
    match s.mode {
        WarpMode::Homography => Ok((Stage::homography(h)?, h, None)),
        WarpMode::Quasi => {
            let xs = s.x_star.or(cfg.x_star).unwrap_or(default_x_star);
            let q = QuasiHomography::build(h, xs).map_err(guidance)?;
            Ok((Stage::quasi(q), h, Some(xs)))
        }
    }
}

fn cmd_warp(a: WarpArgs) -> Result<()> {
    let cfg = load_config(a.source.config.as_deref())?;
    let image = a.image.as_deref().map(read_image).transpose()?;
    let default_xs = image.as_ref().map_or(0.0, |i| (i.width as f64 - 1.0) / 2.0);
    let (stage, _, _) = build_stage(&a.source, &cfg, default_xs)?;
    if let (Some(img), Some(out)) = (&image, &a.out) {
        let frame = canvas_bounds(&stage, (img.width, img.height), (img.width, img.height), cfg.stitch.canvas_cap)?;
        warp_image(&stage, img, frame).write(out)?;
        println!("{}", json!({ "canvas": [frame.width, frame.height], "origin": [frame.origin.x, frame.origin.y] }));
    }
    for &(x, y) in &a.points {
        let p = Point::new(x, y);
        let fwd = stage.forward(p);
        let back = fwd.as_ref().ok().map(|&q| stage.backward(q));
        println!(
            "{}",
            json!({
                "point": [x, y],
                "forward": fwd.as_ref().ok().map(|q| [q.x, q.y]),
                "round_trip": back.and_then(|b| b.ok()).map(|b| [b.x, b.y]),
                "error": fwd.err().map(|e| e.kind()),
            })
        );
    }
    Ok(())
}

fn cmd_diagnose_mesh(a: MeshArgs) -> Result<()> {
    let cfg = load_config(a.source.config.as_deref())?;
    let h = resolve_homography(&a.source, &cfg)?;
    let x_range = a.x_range.unwrap_or((cfg.mesh.x_range[0], cfg.mesh.x_range[1]));
    let y_range = a.y_range.unwrap_or((cfg.mesh.y_range[0], cfg.mesh.y_range[1]));
    let steps = a.steps.unwrap_or((cfg.mesh.steps[0], cfg.mesh.steps[1]));
    let x_star = match a.source.mode {
        WarpMode::Homography => None,
        WarpMode::Quasi => Some(a.source.x_star.or(cfg.x_star).unwrap_or((x_range.0 + x_range.1) / 2.0)),
    };
    let fig = MeshFigure::build(&h, x_star, MeshGrid { x_range, y_range, steps }).map_err(guidance)?;
    write_text(&a.out, &fig.to_svg()?)
}

fn cmd_diagnose_scale(a: ScaleArgs) -> Result<()> {
    let cfg = load_config(a.source.config.as_deref())?;
    let h = resolve_homography(&a.source, &cfg)?;
    let x_range = a.x_range.unwrap_or((cfg.scale.x_range[0], cfg.scale.x_range[1]));
    let x_star = a.source.x_star.or(cfg.x_star).unwrap_or((x_range.0 + x_range.1) / 2.0);
    let series = ScaleSeries::build(&h, x_star, x_range, a.samples.unwrap_or(cfg.scale.samples), cfg.scale.fallback_row)
        .map_err(guidance)?;
    if let Some(note) = &series.note {
        println!("{note}");
    }
    write_text(&a.csv, &series.to_csv())?;
    write_text(&a.svg, &series.to_svg())
}

fn cmd_metrics(a: MetricsArgs) -> Result<()> {
    let cfg = load_config(a.source.config.as_deref())?;
    let [rx0, rx1, ry0, ry1] = cfg.metrics.region;
    let (stage, h, x_star) = build_stage(&a.source, &cfg, (rx0 + rx1) / 2.0)?;
    // Default region: the part of the configured region beyond the partition.
    let [x0, x1, y0, y1] = a.region.unwrap_or([x_star.map_or(rx0, |x| x.max(rx0)), rx1, ry0, ry1]);
    let row = a.row.or_else(|| h.horizon_row().ok()).unwrap_or((y0 + y1) / 2.0) + 0.0;
    let n = a.samples.unwrap_or(cfg.metrics.samples);
    let m = measure(&stage, Region { x_range: (x0, x1), y_range: (y0, y1) }, row, n)?;
    let out = json!({
        "mode": a.source.mode,
        "x_star": x_star,
        "row": row,
        "region": [x0, x1, y0, y1],
        "samples": n,
        "scale_nonlinearity": m.scale_nonlinearity,
        "slope_deviation": m.slope_deviation,
        "fold_count": m.fold_count,
    });
    let text = serde_json::to_string_pretty(&out)? + "\n";
    match &a.out {
        Some(p) => write_text(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("QUASIWARP_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidInput(format!("QUASIWARP_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    init_threads()?;
    match cli.command {
        Command::Stitch(a) => cmd_stitch(a),
        Command::StitchMulti(a) => cmd_stitch_multi(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Warp(a) => cmd_warp(a),
        Command::DiagnoseMesh(a) => cmd_diagnose_mesh(a),
        Command::DiagnoseScale(a) => cmd_diagnose_scale(a),
        Command::Metrics(a) => cmd_metrics(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let cat = e.category();
            eprintln!(
                "{}",
                json!({ "error": { "category": cat.as_str(), "kind": e.kind(), "message": e.to_string() } })
            );
            ExitCode::from(cat.exit_code() as u8)
        }
    }
}
