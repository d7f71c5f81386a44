use crate::error::{Error, Result};
use crate::geometry::{Homography, Point};
use crate::quasi::QuasiHomography;
use crate::warp::{HomographyWarp, Mirror, Warp};

#[derive(Debug, Clone, PartialEq)]
pub enum StageMap {
    Homography(HomographyWarp),
    Quasi(QuasiHomography),
}

/// One pairwise map, optionally evaluated in horizontally mirrored frames
/// (used when the target lies left of its reference).
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub map: StageMap,
    pub mirror: Option<Mirror>,
}

impl Stage {
    pub fn homography(h: Homography) -> Result<Self> {
        Ok(Stage {
            map: StageMap::Homography(HomographyWarp::new(h)?),
            mirror: None,
        })
    }

    pub fn quasi(q: QuasiHomography) -> Self {
        Stage {
            map: StageMap::Quasi(q),
            mirror: None,
        }
    }

    pub fn with_mirror(mut self, mirror: Option<Mirror>) -> Self {
        self.mirror = mirror;
        self
    }

    /// The base homography in the stage's working (possibly mirrored) frames.
    pub fn working_homography(&self) -> Homography {
        match &self.map {
            StageMap::Homography(h) => h.forward,
            StageMap::Quasi(q) => *q.base(),
        }
    }

    pub fn quasi_map(&self) -> Option<&QuasiHomography> {
        match &self.map {
            StageMap::Quasi(q) => Some(q),
            StageMap::Homography(_) => None,
        }
    }

    /// Source-frame point expressed in working coordinates.
    pub fn to_working(&self, p: Point) -> Point {
        self.mirror.map_or(p, |m| m.source(p))
    }

    fn inner(&self) -> &dyn Warp {
        match &self.map {
            StageMap::Homography(h) => h,
            StageMap::Quasi(q) => q,
        }
    }
}

impl Warp for Stage {
    fn forward(&self, p: Point) -> Result<Point> {
        match self.mirror {
            Some(m) => Ok(m.dest(self.inner().forward(m.source(p))?)),
            None => self.inner().forward(p),
        }
    }

    fn backward(&self, q: Point) -> Result<Point> {
        match self.mirror {
            Some(m) => Ok(m.source(self.inner().backward(m.dest(q))?)),
            None => self.inner().backward(q),
        }
    }
}

/// Composite of pairwise stages: forward applies `stages[0]` first,
/// backward undoes them in reverse.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainedWarp {
    stages: Vec<Stage>,
}

impl ChainedWarp {
    pub fn new(stages: Vec<Stage>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::InvalidInput("a warp chain needs at least one stage".into()));
        }
        Ok(ChainedWarp { stages })
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }
}

impl Warp for ChainedWarp {
    fn forward(&self, p: Point) -> Result<Point> {
        compose_warps(self, p)
    }

    fn backward(&self, q: Point) -> Result<Point> {
        compose_warps_inverse(self, q)
    }
}

fn tag(stage: usize) -> impl FnOnce(Error) -> Error {
    move |e| Error::Stage {
        stage,
        source: Box::new(e),
    }
}

pub fn compose_warps(chain: &ChainedWarp, p: Point) -> Result<Point> {
    chain
        .stages
        .iter()
        .enumerate()
        .try_fold(p, |acc, (k, s)| s.forward(acc).map_err(tag(k)))
}

pub fn compose_warps_inverse(chain: &ChainedWarp, q: Point) -> Result<Point> {
    chain
        .stages
        .iter()
        .enumerate()
        .rev()
        .try_fold(q, |acc, (k, s)| s.backward(acc).map_err(tag(k)))
}
