//! Complex scalar fields on physical grids, and the two unitary optical
//! transforms every bench configuration is assembled from: the Fourier lens
//! and the imaging relay.
//!
//! Amplitudes carry units of sqrt(probability)/meter, so the physical power
//! (total detection probability) of a field is `sum |a|^2 * pitch^2`. Both
//! transforms preserve it exactly up to rounding.

use crate::dft::{centered_dft, padded_centered_dft, parity_index};
use crate::error::{Error, Result};
use crate::grid::{Axis, Grid};
use num_complex::Complex64 as C64;

/// A sampled complex transverse amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    amps: Vec<C64>,
}

impl ScalarField {
    /// Wraps amplitudes (row-major, x fastest) on `grid`.
    ///
    /// The length must match the grid and every value must be finite.
    pub fn new(grid: Grid, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != grid.len() {
            return Err(Error::domain(format!(
                "amplitude buffer holds {} samples, grid needs {}",
                amps.len(),
                grid.len()
            )));
        }
        if !amps.iter().all(|a| a.re.is_finite() && a.im.is_finite()) {
            return Err(Error::domain("field contains non-finite amplitudes"));
        }
        Ok(ScalarField { grid, amps })
    }

    /// An all-zero field on `grid`.
    pub fn zeros(grid: Grid) -> Self {
        ScalarField { grid, amps: vec![C64::new(0.0, 0.0); grid.len()] }
    }

    /// The sampling grid.
    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Row-major amplitudes (x fastest).
    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    /// Amplitude at sample `(ix, iy)`.
    pub fn amp(&self, ix: usize, iy: usize) -> C64 {
        self.amps[self.grid.idx(ix, iy)]
    }

    /// The field multiplied by a complex constant.
    pub fn scaled(&self, c: C64) -> ScalarField {
        ScalarField { grid: self.grid, amps: self.amps.iter().map(|a| a * c).collect() }
    }

    /// Sample-wise sum of two fields on the same grid.
    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        if self.grid != other.grid {
            return Err(Error::domain("cannot add fields on different grids"));
        }
        let amps = self.amps.iter().zip(&other.amps).map(|(a, b)| a + b).collect();
        Ok(ScalarField { grid: self.grid, amps })
    }

    pub(crate) fn from_parts_unchecked(grid: Grid, amps: Vec<C64>) -> Self {
        debug_assert_eq!(amps.len(), grid.len());
        ScalarField { grid, amps }
    }
}

/// A uniform-amplitude field carrying the given total power.
pub fn plane_wave(grid: Grid, power: f64) -> Result<ScalarField> {
    if !(power >= 0.0) {
        return Err(Error::domain(format!("plane wave power must be >= 0, got {power}")));
    }
    let a = (power / grid.len() as f64).sqrt() / grid.pitch();
    Ok(ScalarField { grid, amps: vec![C64::new(a, 0.0); grid.len()] })
}

/// A Gaussian beam with intensity RMS width `sigma` per axis, centered at
/// `(x0, y0)`, normalized numerically to the given total power.
///
/// The amplitude profile is `exp(-r^2 / (4 sigma^2))`; equivalently `sigma`
/// is half the 1/e^2 intensity radius.
pub fn gaussian_beam(grid: Grid, power: f64, center: (f64, f64), sigma: f64) -> Result<ScalarField> {
    if !(power >= 0.0) {
        return Err(Error::domain(format!("beam power must be >= 0, got {power}")));
    }
    if !(sigma > 0.0) {
        return Err(Error::domain(format!("beam width must be positive, got {sigma}")));
    }
    let mut amps = vec![C64::new(0.0, 0.0); grid.len()];
    let mut norm = 0.0;
    for iy in 0..grid.n_y() {
        let dy = grid.y(iy) - center.1;
        for ix in 0..grid.n_x() {
            let dx = grid.x(ix) - center.0;
            let a = (-(dx * dx + dy * dy) / (4.0 * sigma * sigma)).exp();
            norm += a * a;
            amps[grid.idx(ix, iy)] = C64::new(a, 0.0);
        }
    }
    norm *= grid.pitch() * grid.pitch();
    if norm == 0.0 {
        return Err(Error::domain("gaussian beam has no support on this grid"));
    }
    let s = (power / norm).sqrt();
    for a in amps.iter_mut() {
        *a *= s;
    }
    Ok(ScalarField { grid, amps })
}

/// Total power of a field: `sum |a|^2 * pitch^2`.
pub fn total_power(field: &ScalarField) -> f64 {
    let p2 = field.grid.pitch() * field.grid.pitch();
    field.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * p2
}

/// Ideal thin-lens Fourier transform of `field` onto the back focal plane.
///
/// The output lives on a grid of the same sample count with
/// `pitch_out = wavelength * focal / (n * pitch_in)` and is the centered
/// unitary 2D DFT of the input, physically rescaled so total power is
/// preserved exactly. Requires a square grid (a single pitch cannot describe
/// the output of a rectangular one).
pub fn fourier_lens(field: &ScalarField, wavelength: f64, focal: f64) -> Result<ScalarField> {
    if !(wavelength > 0.0) || !wavelength.is_finite() {
        return Err(Error::domain(format!("wavelength must be positive, got {wavelength}")));
    }
    if !(focal > 0.0) || !focal.is_finite() {
        return Err(Error::domain(format!("focal length must be positive, got {focal}")));
    }
    let g = field.grid;
    if g.n_x() != g.n_y() {
        return Err(Error::domain(format!(
            "fourier_lens needs a square grid, got {}x{}",
            g.n_x(),
            g.n_y()
        )));
    }
    let n = g.n_x();
    let pitch_out = wavelength * focal / (n as f64 * g.pitch());
    let out_grid = Grid::square(n, pitch_out)?;

    let mut amps = field.amps.clone();
    // Rows (x direction) are contiguous.
    for row in amps.chunks_mut(n) {
        centered_dft(row);
    }
    // Columns via a scratch buffer.
    let mut col = vec![C64::new(0.0, 0.0); n];
    for ix in 0..n {
        for iy in 0..n {
            col[iy] = amps[iy * n + ix];
        }
        centered_dft(&mut col);
        for iy in 0..n {
            amps[iy * n + ix] = col[iy];
        }
    }
    // Physical amplitude scale: sqrt(pitch_in/pitch_out) per axis on top of
    // the unitary DFT, so sum |a|^2 * pitch^2 is invariant.
    let s = g.pitch() / pitch_out;
    for a in amps.iter_mut() {
        *a *= s;
    }
    Ok(ScalarField { grid: out_grid, amps })
}

/// Ideal imaging relay with the given magnification.
///
/// The output grid pitch is `|magnification| * pitch`; a negative
/// magnification inverts both coordinates. Amplitudes scale by
/// `1/|magnification|` so total power is preserved exactly.
pub fn image_relay(field: &ScalarField, magnification: f64) -> Result<ScalarField> {
    if magnification == 0.0 || !magnification.is_finite() {
        return Err(Error::domain(format!(
            "imaging magnification must be nonzero, got {magnification}"
        )));
    }
    let g = field.grid;
    let out_grid = Grid::new(g.n_x(), g.n_y(), g.pitch() * magnification.abs())?;
    let s = 1.0 / magnification.abs();
    let mut amps = vec![C64::new(0.0, 0.0); g.len()];
    let invert = magnification < 0.0;
    for iy in 0..g.n_y() {
        let oy = if invert { parity_index(iy, g.n_y()) } else { iy };
        for ix in 0..g.n_x() {
            let ox = if invert { parity_index(ix, g.n_x()) } else { ix };
            amps[out_grid.idx(ox, oy)] = field.amps[g.idx(ix, iy)] * s;
        }
    }
    Ok(ScalarField { grid: out_grid, amps })
}

/// One-axis Fourier-lens transform with zero padding, keeping only the
/// central `window` output samples.
///
/// `amps` lives on `axis`; the result lives on an output axis of pitch
/// `wavelength * focal / (n * pad_factor * pitch_in)`. Padding refines the
/// output sampling so that fine structure (such as SLM cells much smaller
/// than the unpadded output pitch) stays resolved; the crop bounds memory.
/// Power restricted to the window is of course not conserved; the caller
/// decides how much of the plane it needs.
pub(crate) fn fourier_axis_windowed(
    amps: &[C64],
    axis: Axis,
    wavelength: f64,
    focal: f64,
    pad_factor: usize,
    window: usize,
) -> Result<(Axis, Vec<C64>)> {
    debug_assert_eq!(amps.len(), axis.n());
    let np = axis.n() * pad_factor;
    let pitch_out = wavelength * focal / (np as f64 * axis.pitch());
    let out_axis = Axis::new(window, pitch_out)?;
    let mut out = padded_centered_dft(amps, pad_factor, window);
    // 1D physical scale: sqrt(pitch_in/pitch_out) per axis (1D power is
    // sum |a|^2 * pitch).
    let s = (axis.pitch() / pitch_out).sqrt();
    for a in out.iter_mut() {
        *a *= s;
    }
    Ok((out_axis, out))
}
