//! The common interface of every planar map used for resampling, plus the
//! horizontal mirror wrapper that lets a right-extending warp serve a
//! target lying left of its reference.

use crate::error::Result;
use crate::geometry::{Homography, Point};

/// A planar map with a forward direction (target → reference frame) and a
/// backward direction used to fill canvas pixels.
pub trait Warp: Send + Sync {
    fn forward(&self, p: Point) -> Result<Point>;
    fn backward(&self, q: Point) -> Result<Point>;
}

impl Warp for Homography {
    fn forward(&self, p: Point) -> Result<Point> {
        self.apply(p)
    }

    fn backward(&self, q: Point) -> Result<Point> {
        // Inverse computed per call; callers on hot paths wrap in `HomographyWarp`.
        self.invert()?.apply(q)
    }
}

/// A homography with its inverse cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomographyWarp {
    pub forward: Homography,
    pub inverse: Homography,
}

impl HomographyWarp {
    pub fn new(h: Homography) -> Result<Self> {
        Ok(HomographyWarp {
            forward: h,
            inverse: h.invert()?,
        })
    }
}

impl Warp for HomographyWarp {
    fn forward(&self, p: Point) -> Result<Point> {
        self.forward.apply(p)
    }

    fn backward(&self, q: Point) -> Result<Point> {
        self.inverse.apply(q)
    }
}

/// Horizontal reflection `x ↦ (width - 1) - x` on both sides of a warp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mirror {
    pub source_width: f64,
    pub dest_width: f64,
}

impl Mirror {
    #[inline]
    pub fn source(&self, p: Point) -> Point {
        Point::new(self.source_width - 1.0 - p.x, p.y)
    }

    #[inline]
    pub fn dest(&self, p: Point) -> Point {
        Point::new(self.dest_width - 1.0 - p.x, p.y)
    }

    pub fn source_matrix(&self) -> Homography {
        Homography::new([-1.0, 0.0, self.source_width - 1.0, 0.0, 1.0, 0.0, 0.0, 0.0])
            .expect("reflection is invertible")
    }

    pub fn dest_matrix(&self) -> Homography {
        Homography::new([-1.0, 0.0, self.dest_width - 1.0, 0.0, 1.0, 0.0, 0.0, 0.0])
            .expect("reflection is invertible")
    }

    /// Conjugates `h` (original frames) into the mirrored frames.
    pub fn conjugate(&self, h: &Homography) -> Result<Homography> {
        self.dest_matrix().compose(&h.compose(&self.source_matrix())?)
    }
}

/// `inner` evaluated in mirrored coordinates.
#[derive(Debug, Clone)]
pub struct Mirrored<W> {
    pub inner: W,
    pub mirror: Mirror,
}

impl<W: Warp> Warp for Mirrored<W> {
    fn forward(&self, p: Point) -> Result<Point> {
        Ok(self.mirror.dest(self.inner.forward(self.mirror.source(p))?))
    }

    fn backward(&self, q: Point) -> Result<Point> {
        Ok(self.mirror.source(self.inner.backward(self.mirror.dest(q))?))
    }
}

impl<W: Warp + ?Sized> Warp for &W {
    fn forward(&self, p: Point) -> Result<Point> {
        (**self).forward(p)
    }

    fn backward(&self, q: Point) -> Result<Point> {
        (**self).backward(q)
    }
}

impl<W: Warp + ?Sized> Warp for Box<W> {
    fn forward(&self, p: Point) -> Result<Point> {
        (**self).forward(p)
    }

    fn backward(&self, q: Point) -> Result<Point> {
        (**self).backward(q)
    }
}
