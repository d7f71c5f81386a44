//! Distortion metrics and figure emitters.

mod figures;
mod metrics;

pub use figures::{fmt_sig, MeshFigure, MeshGrid, MeshPanel, ScaleSeries};
pub use metrics::{collinearity_residual, measure, row_profile, scale_nonlinearity, slope_deviation, DistortionMetrics, Region};
