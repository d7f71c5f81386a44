pub mod compositing;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod pipeline;
pub mod quasi;
pub mod warp;

pub use error::{Error, ErrorCategory, Result};
pub use geometry::{Direction, Homography, Point, Tolerances};
pub use quasi::{QuasiHomography, WarpedMesh};
pub use warp::{HomographyWarp, Mirror, Mirrored, Warp};
pub use pipeline::{stitch_pair, stitch_sequence, StitchOptions, StitchReport, Stitched, WarpMode};
