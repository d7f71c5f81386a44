//! Run configuration shared by the CLI subcommands. Every field has an
//! explicit default; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Homography;
use crate::pipeline::StitchOptions;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    /// Grid nodes per axis (columns, rows).
    pub steps: [usize; 2],
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig {
            x_range: [0.0, 800.0],
            y_range: [0.0, 600.0],
            steps: [10, 10],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScaleConfig {
    pub x_range: [f64; 2],
    pub samples: usize,
    /// Row used when the homography has no perspective term along x.
    pub fallback_row: f64,
}

impl Default for ScaleConfig {
    fn default() -> Self {
        ScaleConfig {
            x_range: [0.0, 800.0],
            samples: 101,
            fallback_row: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    /// `[x0, x1, y0, y1]` in source coordinates.
    pub region: [f64; 4],
    pub samples: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            region: [0.0, 800.0, 0.0, 600.0],
            samples: 33,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub stitch: StitchOptions,
    /// Sequence reference; the middle image when absent.
    pub reference_index: Option<usize>,
    pub homography: Option<Homography>,
    /// Partition abscissa for the diagnostic commands.
    pub x_star: Option<f64>,
    pub mesh: MeshConfig,
    pub scale: ScaleConfig,
    pub metrics: MetricsConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.stitch.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse(&text)
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
