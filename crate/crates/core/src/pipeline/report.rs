use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::compositing::DEFAULT_CANVAS_CAP;
use crate::diagnostics::DistortionMetrics;
use crate::error::{Error, Result};
use crate::estimation::RansacParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WarpMode {
    Quasi,
    Homography,
}

impl fmt::Display for WarpMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WarpMode::Quasi => "quasi",
            WarpMode::Homography => "homography",
        })
    }
}

impl FromStr for WarpMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quasi" => Ok(WarpMode::Quasi),
            "homography" => Ok(WarpMode::Homography),
            other => Err(Error::InvalidInput(format!("unknown warp mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StitchOptions {
    pub mode: WarpMode,
    /// Keep the target's outer vertical border vertical during estimation.
    pub rectify: bool,
    /// Move the partition to the seam's outer extent (two seam passes).
    pub refine_partition: bool,
    pub ransac: RansacParams,
    pub feather_px: usize,
    pub fallback_to_homography: bool,
    pub canvas_cap: usize,
}

impl Default for StitchOptions {
    fn default() -> Self {
        StitchOptions {
            mode: WarpMode::Quasi,
            rectify: false,
            refine_partition: false,
            ransac: RansacParams::default(),
            feather_px: 0,
            fallback_to_homography: true,
            canvas_cap: DEFAULT_CANVAS_CAP,
        }
    }
}

impl StitchOptions {
    pub fn validate(&self) -> Result<()> {
        self.ransac.validate()?;
        if self.canvas_cap < 1 {
            return Err(Error::InvalidInput("canvas_cap must be at least 1".into()));
        }
        Ok(())
    }
}

/// Wall-clock milliseconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Timings {
    pub matching_ms: f64,
    pub estimation_ms: f64,
    /// Canvas bounds plus the backward coordinate maps.
    pub warp_map_ms: f64,
    pub resample_ms: f64,
    pub seam_ms: f64,
    pub blend_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairReport {
    pub pair: usize,
    pub target: usize,
    pub reference: usize,
    /// h1..h8 of the estimated target→reference homography.
    pub homography: [f64; 8],
    pub warp: WarpMode,
    pub fallback: bool,
    pub mirrored: bool,
    pub x_star: f64,
    pub x_star_initial: f64,
    pub y_star: Option<f64>,
    /// Overlap extent in working-frame target columns.
    pub overlap_columns: [i64; 2],
    pub correspondences: usize,
    pub inliers: usize,
    pub inlier_rms: f64,
    pub ransac_iterations: usize,
    pub seam_cost: f64,
    /// Distortion of the applied warp beyond the partition, if that region
    /// intersects the target.
    pub non_overlap_metrics: Option<DistortionMetrics>,
    /// `[x, f(x, y*)]` samples across the target width.
    pub scale_profile: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StitchReport {
    pub mode: WarpMode,
    pub reference_index: usize,
    pub pairs: Vec<PairReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

impl StitchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}
