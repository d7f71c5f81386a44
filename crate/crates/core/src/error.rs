use std::path::PathBuf;

/// Coarse grouping of failures, used for CLI exit codes and machine-readable
/// error reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    InputMissing,
    InputInvalid,
    DegenerateGeometry,
    Internal,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::InputMissing => "input-missing",
            ErrorCategory::InputInvalid => "input-invalid",
            ErrorCategory::DegenerateGeometry => "degenerate-geometry",
            ErrorCategory::Internal => "internal",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::InputMissing | ErrorCategory::InputInvalid => 2,
            ErrorCategory::DegenerateGeometry => 3,
            ErrorCategory::Internal => 4,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("point ({x}, {y}) lies on the vanishing line of the homography")]
    DegeneratePoint { x: f64, y: f64 },
    #[error("homography is singular (|det| below tolerance)")]
    SingularHomography,
    #[error("homography is affine along rows: no unique horizon row exists")]
    AffineDegenerate,
    #[error("linearized scale does not advance rightward (derivative {derivative})")]
    NonMonotoneScale { derivative: f64 },
    #[error("row and column constraint lines are parallel at ({x}, {y})")]
    ParallelConstraintLines { x: f64, y: f64 },
    #[error("no admissible root of the backward quadratic for ({x}, {y})")]
    NoAdmissibleRoot { x: f64, y: f64 },
    #[error("point ({x}, {y}) is outside the range of the warp")]
    OutsideImage { x: f64, y: f64 },
    #[error("degenerate correspondence configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("ill-conditioned estimation problem: {0}")]
    IllConditioned(String),
    #[error("no consensus: best hypothesis supported by {inliers} inliers")]
    NoConsensus { inliers: usize },
    #[error("orientation constraint is infeasible: {0}")]
    ConstraintInfeasible(String),
    #[error("seam is empty")]
    EmptySeam,
    #[error("too few feature matches ({found}, need at least 4)")]
    TooFewFeatures { found: usize },
    #[error("warp is unbounded on the target boundary: {0}")]
    UnboundedWarp(String),
    #[error("images do not overlap")]
    NoOverlap,
    #[error("valid pixel ({x}, {y}) has no label")]
    LabelGap { x: usize, y: usize },
    #[error("partition line x* = {x_star} would cut the overlap interior")]
    PartitionInsideOverlap { x_star: f64 },
    #[error("pairwise estimation failed for pair {pair}: {source}")]
    ChainBreak {
        pair: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("warp stage {stage} failed: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("missing input: {0}")]
    InputMissing(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InputMissing(_) => ErrorCategory::InputMissing,
            Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => ErrorCategory::InputMissing,
            Error::InvalidInput(_) | Error::Io { .. } | Error::Image(_) | Error::Json(_) => {
                ErrorCategory::InputInvalid
            }
            Error::ChainBreak { source, .. } | Error::Stage { source, .. } => source.category(),
            Error::DegeneratePoint { .. }
            | Error::SingularHomography
            | Error::AffineDegenerate
            | Error::NonMonotoneScale { .. }
            | Error::ParallelConstraintLines { .. }
            | Error::NoAdmissibleRoot { .. }
            | Error::OutsideImage { .. }
            | Error::DegenerateConfiguration(_)
            | Error::IllConditioned(_)
            | Error::NoConsensus { .. }
            | Error::ConstraintInfeasible(_)
            | Error::EmptySeam
            | Error::TooFewFeatures { .. }
            | Error::UnboundedWarp(_)
            | Error::NoOverlap
            | Error::PartitionInsideOverlap { .. } => ErrorCategory::DegenerateGeometry,
            Error::LabelGap { .. } => ErrorCategory::Internal,
        }
    }

    /// Stable identifier of the variant, e.g. `"AffineDegenerate"`.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DegeneratePoint { .. } => "DegeneratePoint",
            Error::SingularHomography => "SingularHomography",
            Error::AffineDegenerate => "AffineDegenerate",
            Error::NonMonotoneScale { .. } => "NonMonotoneScale",
            Error::ParallelConstraintLines { .. } => "ParallelConstraintLines",
            Error::NoAdmissibleRoot { .. } => "NoAdmissibleRoot",
            Error::OutsideImage { .. } => "OutsideImage",
            Error::DegenerateConfiguration(_) => "DegenerateConfiguration",
            Error::IllConditioned(_) => "IllConditioned",
            Error::NoConsensus { .. } => "NoConsensus",
            Error::ConstraintInfeasible(_) => "ConstraintInfeasible",
            Error::EmptySeam => "EmptySeam",
            Error::TooFewFeatures { .. } => "TooFewFeatures",
            Error::UnboundedWarp(_) => "UnboundedWarp",
            Error::NoOverlap => "NoOverlap",
            Error::LabelGap { .. } => "LabelGap",
            Error::PartitionInsideOverlap { .. } => "PartitionInsideOverlap",
            Error::ChainBreak { .. } => "ChainBreak",
            Error::Stage { .. } => "Stage",
            Error::InputMissing(_) => "InputMissing",
            Error::InvalidInput(_) => "InvalidInput",
            Error::Io { .. } => "Io",
            Error::Image(_) => "Image",
            Error::Json(_) => "Json",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
