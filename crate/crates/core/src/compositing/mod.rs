//! Canvas sizing, backward-warp resampling, seam cutting and label blending.

mod blend;
mod canvas;
pub mod maxflow;
mod raster;
mod seam;

pub use blend::{blend, pair_labels, Mosaic};
pub use canvas::{
    boundary_samples, canvas_bounds, canvas_bounds_multi, place_reference, warp_image, BackwardMap, CanvasFrame,
    DEFAULT_CANVAS_CAP, EDGE_SAMPLES,
};
pub use raster::{psnr, Raster};
pub use seam::{anchors, components, edge_cost, find_seam, find_seam_pinned, overlap_mask, seam_cost, Anchor, SeamCut};
