//! Homography estimation from point correspondences.

mod correspondence;
mod dlt;
mod matcher;
mod partition;
mod ransac;
mod rectified;

pub use correspondence::{Correspondence, CorrespondenceSet, PairOrder};
pub use dlt::{algebraic_cost, dlt};
pub use matcher::{detect_and_match, MatchOptions};
pub use partition::refine_partition;
pub use ransac::{inlier_rms, ransac, symmetric_transfer_error, RansacParams, RansacResult};
pub use rectified::{border_violation, estimate_rectified, rectify_consensus};
