//! Physical sample grids for transverse optical fields.
//!
//! Coordinates are centered on the optical axis: sample `k` of an axis with
//! `n` samples sits at `(k - n/2) * pitch` (integer division), so the origin
//! is always itself a sample point. Sample counts are restricted to powers of
//! two so the Fourier transforms stay fast and their centering shifts exact.

use crate::error::{Error, Result};

/// One transverse axis: a sample count and a physical pitch in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    n: usize,
    pitch: f64,
}

impl Axis {
    /// Creates an axis of `n` samples spaced `pitch` meters apart.
    ///
    /// `n` must be a power of two, at least 2; `pitch` must be positive and
    /// finite.
    pub fn new(n: usize, pitch: f64) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::domain(format!(
                "axis sample count must be a power of two >= 2, got {n}"
            )));
        }
        if !(pitch > 0.0) || !pitch.is_finite() {
            return Err(Error::domain(format!("axis pitch must be positive, got {pitch}")));
        }
        Ok(Axis { n, pitch })
    }

    /// Number of samples.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Distance between neighbouring samples in meters.
    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    /// Physical coordinate of sample `k`, in meters.
    pub fn coord(&self, k: usize) -> f64 {
        (k as f64 - (self.n / 2) as f64) * self.pitch
    }

    /// Index of the sample nearest to coordinate `x`, if any sample lies
    /// within half a pitch of it; `None` when `x` falls outside the axis.
    pub fn nearest(&self, x: f64) -> Option<usize> {
        let idx = (x / self.pitch + (self.n / 2) as f64).round();
        if idx < 0.0 || idx >= self.n as f64 {
            None
        } else {
            Some(idx as usize)
        }
    }

    /// Coordinate of the first sample (most negative edge of the axis).
    pub fn min_coord(&self) -> f64 {
        self.coord(0)
    }

    /// Coordinate of the last sample.
    pub fn max_coord(&self) -> f64 {
        self.coord(self.n - 1)
    }
}

/// A square-pitched 2D sampling of the transverse plane.
///
/// The pitch is shared by both axes; only the sample counts may differ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n_x: usize,
    n_y: usize,
    pitch: f64,
}

impl Grid {
    /// Creates a grid of `n_x` by `n_y` samples with uniform `pitch` meters.
    ///
    /// Both counts must be powers of two, at least 2.
    pub fn new(n_x: usize, n_y: usize, pitch: f64) -> Result<Self> {
        Axis::new(n_x, pitch)?;
        Axis::new(n_y, pitch)?;
        Ok(Grid { n_x, n_y, pitch })
    }

    /// Convenience constructor for an `n` by `n` grid.
    pub fn square(n: usize, pitch: f64) -> Result<Self> {
        Grid::new(n, n, pitch)
    }

    /// Samples along x.
    pub fn n_x(&self) -> usize {
        self.n_x
    }

    /// Samples along y.
    pub fn n_y(&self) -> usize {
        self.n_y
    }

    /// Sample spacing in meters (both axes).
    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    /// Total number of samples.
    pub fn len(&self) -> usize {
        self.n_x * self.n_y
    }

    /// True when the grid holds no samples; cannot occur for valid grids.
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The x axis of the grid.
    pub fn x_axis(&self) -> Axis {
        Axis { n: self.n_x, pitch: self.pitch }
    }

    /// The y axis of the grid.
    pub fn y_axis(&self) -> Axis {
        Axis { n: self.n_y, pitch: self.pitch }
    }

    /// Physical x coordinate of column `ix`.
    pub fn x(&self, ix: usize) -> f64 {
        (ix as f64 - (self.n_x / 2) as f64) * self.pitch
    }

    /// Physical y coordinate of row `iy`.
    pub fn y(&self, iy: usize) -> f64 {
        (iy as f64 - (self.n_y / 2) as f64) * self.pitch
    }

    /// Flat index of sample `(ix, iy)` in row-major storage (x fastest).
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.n_x + ix
    }
}
