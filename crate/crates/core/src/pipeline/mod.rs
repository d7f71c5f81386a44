//! Two-image and sequence stitching.

mod chain;
mod pair;
mod report;
mod sequence;

pub use chain::{compose_warps, compose_warps_inverse, ChainedWarp, Stage, StageMap};
pub use pair::stitch_pair;
pub use report::{PairReport, StitchOptions, StitchReport, Timings, WarpMode};
pub use sequence::{default_reference, stitch_sequence};

use crate::compositing::{CanvasFrame, Mosaic};

/// A finished mosaic with its canvas placement and run report.
#[derive(Debug, Clone)]
pub struct Stitched {
    pub mosaic: Mosaic,
    pub frame: CanvasFrame,
    pub report: StitchReport,
}
