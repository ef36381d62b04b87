//! The photon-pair source and heralding optics.
//!
//! The transverse two-photon amplitude is modeled as a position-correlated
//! double Gaussian, separable across the x and y axes:
//!
//! ```text
//! psi(x_s, x_i) = N * exp(-(x_s + x_i)^2 / (4 w_plus^2))
//!                   * exp(-(x_s - x_i)^2 / (4 w_minus^2))
//! ```
//!
//! `w_plus` is the pump envelope width (center-of-mass spread), `w_minus`
//! the much narrower relative-coordinate width standing in for the
//! phase-matching function. With `w_minus << w_plus` the photons are tightly
//! position-correlated: detecting the idler at a point leaves the signal in
//! a narrow conditional state of amplitude width
//! `w_c = w_plus * w_minus / sqrt(w_plus^2 + w_minus^2)` (equal to the RMS
//! width of the conditional intensity), while projecting the idler onto a
//! transverse momentum leaves the signal in a broad state of RMS width
//! `sqrt(w_plus^2 + w_minus^2) / 2`. That dichotomy is what the two idler
//! arms (imaging vs Fourier lens) select between, and everything downstream
//! measures.

use crate::dft::{centered_dft, parity_index};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{Axis, Grid};
use num_complex::Complex64 as C64;
use std::io::Write;

/// Conditional probability below which a heralding detector is considered
/// to sit outside the idler beam.
pub const HERALD_MIN_PROBABILITY: f64 = 1e-15;

const COVERAGE_REQUIRED: f64 = 0.999;

/// Source parameters of the photon-pair state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpdcParams {
    pump_waist: f64,
    correlation_width: f64,
    lambda_pump: f64,
    lambda_down: f64,
}

impl SpdcParams {
    /// Validates and stores source parameters (all lengths in meters).
    ///
    /// Requires `0 < correlation_width < pump_waist` (the position-correlated
    /// regime) and degenerate down-conversion,
    /// `lambda_down = 2 * lambda_pump` to 1e-12 relative.
    pub fn new(
        pump_waist: f64,
        correlation_width: f64,
        lambda_pump: f64,
        lambda_down: f64,
    ) -> Result<Self> {
        if !(pump_waist > 0.0) || !pump_waist.is_finite() {
            return Err(Error::domain(format!("pump waist must be positive, got {pump_waist}")));
        }
        if !(correlation_width > 0.0) || correlation_width >= pump_waist {
            return Err(Error::domain(format!(
                "correlation width must satisfy 0 < w ({correlation_width}) < pump waist ({pump_waist})"
            )));
        }
        if !(lambda_pump > 0.0) || !(lambda_down > 0.0) {
            return Err(Error::domain("wavelengths must be positive"));
        }
        if ((lambda_down - 2.0 * lambda_pump) / lambda_down).abs() > 1e-12 {
            return Err(Error::domain(format!(
                "non-degenerate pair: lambda_down {lambda_down} != 2 * lambda_pump {lambda_pump}"
            )));
        }
        Ok(SpdcParams { pump_waist, correlation_width, lambda_pump, lambda_down })
    }

    /// Pump envelope width `w_plus` in meters.
    pub fn pump_waist(&self) -> f64 {
        self.pump_waist
    }

    /// Relative-coordinate width `w_minus` in meters.
    pub fn correlation_width(&self) -> f64 {
        self.correlation_width
    }

    /// Pump wavelength in meters.
    pub fn lambda_pump(&self) -> f64 {
        self.lambda_pump
    }

    /// Down-converted (signal/idler) wavelength in meters.
    pub fn lambda_down(&self) -> f64 {
        self.lambda_down
    }

    /// RMS width of the conditional signal intensity at the crystal when the
    /// idler is detected at a point (imaging arm):
    /// `w_plus * w_minus / sqrt(w_plus^2 + w_minus^2)`.
    pub fn conditional_width_imaging(&self) -> f64 {
        let (a, b) = (self.pump_waist, self.correlation_width);
        a * b / (a * a + b * b).sqrt()
    }

    /// RMS width of the conditional signal intensity at the crystal when the
    /// idler is projected onto zero transverse momentum (Fourier arm):
    /// `sqrt(w_plus^2 + w_minus^2) / 2`.
    pub fn conditional_width_fourier(&self) -> f64 {
        let (a, b) = (self.pump_waist, self.correlation_width);
        (a * a + b * b).sqrt() / 2.0
    }

    /// Analytic Schmidt number of the double-Gaussian state,
    /// `(r + 1/r)^2 / 4` with `r = w_plus / w_minus`.
    ///
    /// Each transverse axis contributes a factor `(r + 1/r) / 2` (the purity
    /// of the one-axis reduced state is `2r / (r^2 + 1)`), and the x and y
    /// axes are independent and identical, so the mode count of the full
    /// transverse state is that factor squared.
    pub fn schmidt_number_analytic(&self) -> f64 {
        let r = self.pump_waist / self.correlation_width;
        let s = r + 1.0 / r;
        s * s / 4.0
    }
}

impl Default for SpdcParams {
    /// Bench defaults: `w_plus` 500 um, `w_minus` 25 um, 405 nm pump,
    /// 810 nm pairs.
    fn default() -> Self {
        SpdcParams::new(500e-6, 25e-6, 405e-9, 810e-9).expect("defaults are valid")
    }
}

/// The two idler-arm configurations between the crystal and the heralding
/// detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IdlerOptics {
    /// Imaging relay: the detector samples idler *position* at the crystal.
    Imaging {
        /// Relay magnification (nonzero; negative inverts coordinates).
        magnification: f64,
    },
    /// Fourier lens: the detector samples idler transverse *momentum*.
    FourierLens {
        /// Focal length in meters.
        focal: f64,
    },
}

/// Complex amplitude over one transverse axis of the (signal, idler) pair.
///
/// Stored row-major with the idler index fastest: `amps[i_s * n_i + i_i]`.
/// Normalized so that `sum |psi|^2 * pitch_s * pitch_i = 1`. Carries the
/// down-converted wavelength so idler-side lens transforms are
/// self-contained.
#[derive(Debug, Clone, PartialEq)]
pub struct BiphotonAxis {
    signal: Axis,
    idler: Axis,
    lambda_down: f64,
    amps: Vec<C64>,
}

impl BiphotonAxis {
    /// Signal-axis sampling.
    pub fn signal_axis(&self) -> Axis {
        self.signal
    }

    /// Idler-axis sampling.
    pub fn idler_axis(&self) -> Axis {
        self.idler
    }

    /// Down-converted wavelength in meters.
    pub fn lambda_down(&self) -> f64 {
        self.lambda_down
    }

    /// Amplitude at (signal sample, idler sample).
    pub fn amp(&self, i_s: usize, i_i: usize) -> C64 {
        self.amps[i_s * self.idler.n() + i_i]
    }

    /// Raw amplitudes, idler index fastest.
    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    /// Probability of finding the idler at idler sample `i_i` (signal traced
    /// out), including the sampling measure.
    pub fn idler_marginal(&self, i_i: usize) -> f64 {
        let n_i = self.idler.n();
        let mut sum = 0.0;
        for i_s in 0..self.signal.n() {
            sum += self.amps[i_s * n_i + i_i].norm_sqr();
        }
        sum * self.signal.pitch() * self.idler.pitch()
    }

    /// The conditional signal amplitude for an idler found at sample `i_i`,
    /// normalized to unit 1D power, together with the probability of that
    /// heralding outcome.
    pub fn conditional_column(&self, i_i: usize) -> Result<(Vec<C64>, f64)> {
        let prob = self.idler_marginal(i_i);
        if prob < HERALD_MIN_PROBABILITY {
            return Err(Error::HeraldMiss { probability: prob });
        }
        let n_i = self.idler.n();
        let norm = (prob / self.idler.pitch()).sqrt();
        let col = (0..self.signal.n()).map(|i_s| self.amps[i_s * n_i + i_i] / norm).collect();
        Ok((col, prob))
    }

    /// Writes the amplitude matrix in the PHIF1 container, signal axis as
    /// the first (fastest) dimension, idler as the second. Requires equal
    /// pitches on both axes, since the container stores a single pitch.
    pub fn write_phif<W: Write>(&self, w: &mut W) -> Result<()> {
        if self.signal.pitch() != self.idler.pitch() {
            return Err(Error::domain(
                "PHIF export needs equal signal/idler pitches (single-pitch container)",
            ));
        }
        let n_s = self.signal.n();
        let n_i = self.idler.n();
        let mut transposed = Vec::with_capacity(n_s * n_i);
        for i_i in 0..n_i {
            for i_s in 0..n_s {
                transposed.push(self.amp(i_s, i_i));
            }
        }
        crate::phif::write_matrix(w, n_s, n_i, self.signal.pitch(), &transposed)
    }
}

/// Samples the double-Gaussian biphoton amplitude on the given axes.
///
/// Errors with [`Error::Coverage`] when less than 99.9% of the analytic
/// probability falls inside the sampled window; otherwise the discrete state
/// is renormalized to exactly unit probability.
pub fn make_biphoton_axis(params: &SpdcParams, grid_s: Axis, grid_i: Axis) -> Result<BiphotonAxis> {
    let (a, b) = (params.pump_waist, params.correlation_width);
    // Unit-norm continuous prefactor: the squared exponential integrates to
    // pi*a*b, so captured probability reads directly against 1.
    let prefactor = 1.0 / (std::f64::consts::PI * a * b).sqrt();
    let n_s = grid_s.n();
    let n_i = grid_i.n();
    let mut amps = Vec::with_capacity(n_s * n_i);
    let mut captured = 0.0;
    for i_s in 0..n_s {
        let xs = grid_s.coord(i_s);
        for i_i in 0..n_i {
            let xi = grid_i.coord(i_i);
            let sum = xs + xi;
            let diff = xs - xi;
            let v = prefactor
                * (-(sum * sum) / (4.0 * a * a) - (diff * diff) / (4.0 * b * b)).exp();
            captured += v * v;
            amps.push(C64::new(v, 0.0));
        }
    }
    captured *= grid_s.pitch() * grid_i.pitch();
    if captured < COVERAGE_REQUIRED {
        return Err(Error::Coverage { captured, required: COVERAGE_REQUIRED });
    }
    let renorm = 1.0 / captured.sqrt();
    for v in amps.iter_mut() {
        *v *= renorm;
    }
    Ok(BiphotonAxis { signal: grid_s, idler: grid_i, lambda_down: params.lambda_down, amps })
}

/// Applies the idler-arm optics to the idler coordinate of a biphoton axis.
///
/// Imaging relabels the idler axis (pitch scaled by |m|, coordinates
/// inverted for negative m, amplitudes scaled to preserve probability); the
/// Fourier lens applies the centered unitary transform over the idler index
/// at the stored down-converted wavelength. Probability is preserved to
/// rounding in both cases.
pub fn apply_idler_optics(bx: &BiphotonAxis, optics: &IdlerOptics) -> Result<BiphotonAxis> {
    let n_s = bx.signal.n();
    let n_i = bx.idler.n();
    match *optics {
        IdlerOptics::Imaging { magnification: m } => {
            if m == 0.0 || !m.is_finite() {
                return Err(Error::domain(format!("imaging magnification must be nonzero, got {m}")));
            }
            let idler = Axis::new(n_i, bx.idler.pitch() * m.abs())?;
            let s = 1.0 / m.abs().sqrt();
            let mut amps = vec![C64::new(0.0, 0.0); n_s * n_i];
            for i_s in 0..n_s {
                for i_i in 0..n_i {
                    let o = if m < 0.0 { parity_index(i_i, n_i) } else { i_i };
                    amps[i_s * n_i + o] = bx.amps[i_s * n_i + i_i] * s;
                }
            }
            Ok(BiphotonAxis { signal: bx.signal, idler, lambda_down: bx.lambda_down, amps })
        }
        IdlerOptics::FourierLens { focal } => {
            if !(focal > 0.0) || !focal.is_finite() {
                return Err(Error::domain(format!("focal length must be positive, got {focal}")));
            }
            let pitch_out = bx.lambda_down * focal / (n_i as f64 * bx.idler.pitch());
            let idler = Axis::new(n_i, pitch_out)?;
            let s = (bx.idler.pitch() / pitch_out).sqrt();
            let mut amps = bx.amps.clone();
            for row in amps.chunks_mut(n_i) {
                centered_dft(row);
                for v in row.iter_mut() {
                    *v *= s;
                }
            }
            Ok(BiphotonAxis { signal: bx.signal, idler, lambda_down: bx.lambda_down, amps })
        }
    }
}

/// Position of a heralding detection on the transformed idler axis, snapped
/// to the nearest sample.
fn herald_column(bx: &BiphotonAxis, optics: &IdlerOptics, coord: f64) -> Result<(BiphotonAxis, usize)> {
    let transformed = apply_idler_optics(bx, optics)?;
    match transformed.idler_axis().nearest(coord) {
        Some(i) => Ok((transformed, i)),
        None => Err(Error::HeraldMiss { probability: 0.0 }),
    }
}

/// Prepares the heralded signal field at the crystal plane.
///
/// The idler coordinate of each axis is propagated through `optics` and
/// projected onto the detection position of `d2` (nearest transformed idler
/// sample to the pinhole center; the finite pinhole extent is a
/// detection-plane statistics concern handled by the experiment layer). The
/// two normalized 1D conditional amplitudes are combined into the separable
/// 2D field `psi_x(x) * psi_y(y)`.
///
/// `bx` and `by` must share the signal axis; `d2` must be a point detector.
pub fn herald_signal(
    bx: &BiphotonAxis,
    by: &BiphotonAxis,
    optics: &IdlerOptics,
    d2: &crate::detect::DetectorSpec,
) -> Result<ScalarField> {
    let (x2, y2) = match d2 {
        crate::detect::DetectorSpec::Point { position, .. } => *position,
        crate::detect::DetectorSpec::Bucket => {
            return Err(Error::domain("heralding requires a point detector"));
        }
    };
    if bx.signal != by.signal {
        return Err(Error::domain("x and y biphoton axes must share the signal sampling"));
    }
    let (tx, ix) = herald_column(bx, optics, x2)?;
    let (ty, iy) = herald_column(by, optics, y2)?;
    let (col_x, _) = tx.conditional_column(ix)?;
    let (col_y, _) = ty.conditional_column(iy)?;

    let n = bx.signal.n();
    let grid = Grid::square(n, bx.signal.pitch())?;
    let mut amps = Vec::with_capacity(n * n);
    for cy in col_y.iter() {
        for cx in col_x.iter() {
            amps.push(cx * cy);
        }
    }
    Ok(ScalarField::from_parts_unchecked(grid, amps))
}

/// RMS width of the conditional 1D signal intensity at the crystal plane,
/// given an idler detection at `x_detect` behind `optics`.
pub fn conditional_width(bx: &BiphotonAxis, optics: &IdlerOptics, x_detect: f64) -> Result<f64> {
    let (t, i) = herald_column(bx, optics, x_detect)?;
    let (col, _) = t.conditional_column(i)?;
    let mut w = 0.0;
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for (i_s, c) in col.iter().enumerate() {
        let x = bx.signal.coord(i_s);
        let p = c.norm_sqr();
        w += p;
        m1 += p * x;
        m2 += p * x * x;
    }
    let mean = m1 / w;
    Ok((m2 / w - mean * mean).sqrt())
}

/// Schmidt number (effective transverse mode count) of the two-photon state
/// whose x and y factors both carry the amplitude of `bx`.
///
/// The per-axis count is `K_axis = 1 / sum_k lambda_k^2`, where `lambda_k`
/// are the normalized squared singular values of the amplitude matrix; the
/// two transverse axes are independent and identical, so the full state has
/// `K = K_axis^2`. The per-axis count is evaluated through the Gram identity
/// `K_axis = ||A||_F^4 / ||A^dagger A||_F^2`, which equals the singular-value
/// expression exactly and avoids a full decomposition. `K = 1` for separable
/// states; idler- or signal-side unitaries leave it unchanged.
pub fn schmidt_number(bx: &BiphotonAxis) -> f64 {
    let n_s = bx.signal.n();
    let n_i = bx.idler.n();
    let mut frob2 = 0.0;
    for a in &bx.amps {
        frob2 += a.norm_sqr();
    }
    // Gram matrix G = A^dagger A, accumulated row by row; only the upper
    // triangle is needed since G is Hermitian.
    let mut gram = vec![C64::new(0.0, 0.0); n_i * n_i];
    for i_s in 0..n_s {
        let row = &bx.amps[i_s * n_i..(i_s + 1) * n_i];
        for (i, &ri) in row.iter().enumerate() {
            let c = ri.conj();
            let out = &mut gram[i * n_i..(i + 1) * n_i];
            for (j, &rj) in row.iter().enumerate().skip(i) {
                out[j] += c * rj;
            }
        }
    }
    let mut gram2 = 0.0;
    for i in 0..n_i {
        gram2 += gram[i * n_i + i].norm_sqr();
        for j in i + 1..n_i {
            gram2 += 2.0 * gram[i * n_i + j].norm_sqr();
        }
    }
    let k_axis = frob2 * frob2 / gram2;
    k_axis * k_axis
}
