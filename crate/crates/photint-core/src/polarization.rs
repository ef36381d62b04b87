//! Jones-calculus stage of the readout: diagonal preparation, phase-only
//! SLM modulation of the horizontal component, half-wave-plate rotation and
//! the polarizing beam splitter.
//!
//! With input amplitude `E` prepared diagonally, a mask phase `phi` on H and
//! the half-wave plate at 22.5 degrees, the two PBS ports carry
//!
//! ```text
//! |h'|^2 = |E|^2 (1 + cos phi) / 2
//! |v'|^2 = |E|^2 (1 - cos phi) / 2
//! ```
//!
//! which is what turns a phase pattern into measurable intensities. All
//! operations preserve the total probability exactly up to rounding.

use crate::error::{Error, Result};
use crate::field::{total_power, ScalarField};
use crate::mask::PhaseMask;
use num_complex::Complex64 as C64;
use std::f64::consts::FRAC_1_SQRT_2;

/// An (H, V) pair of scalar fields sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizedField {
    h: ScalarField,
    v: ScalarField,
}

impl PolarizedField {
    /// Pairs two components; their grids must match exactly.
    pub fn new(h: ScalarField, v: ScalarField) -> Result<Self> {
        if h.grid() != v.grid() {
            return Err(Error::domain("H and V components must share one grid"));
        }
        Ok(PolarizedField { h, v })
    }

    /// Horizontal component.
    pub fn h(&self) -> &ScalarField {
        &self.h
    }

    /// Vertical component.
    pub fn v(&self) -> &ScalarField {
        &self.v
    }

    /// Total probability carried by both components.
    pub fn total_probability(&self) -> f64 {
        total_power(&self.h) + total_power(&self.v)
    }
}

/// Splits a field evenly onto H and V (linear diagonal polarization).
pub fn prepare_diagonal(field: &ScalarField) -> PolarizedField {
    let half = field.scaled(C64::new(FRAC_1_SQRT_2, 0.0));
    PolarizedField { h: half.clone(), v: half }
}

/// Applies the mask phase to the H component only; V passes unchanged.
///
/// Each grid sample picks up the phase of the mask cell containing it
/// (nearest-cell lookup); samples outside the mask footprint see phase 0.
pub fn modulate(pf: &PolarizedField, mask: &PhaseMask) -> PolarizedField {
    let g = pf.h.grid();
    let mut amps = pf.h.amps().to_vec();
    for iy in 0..g.n_y() {
        let y = g.y(iy);
        for ix in 0..g.n_x() {
            let phi = mask.phase_at(g.x(ix), y);
            if phi != 0.0 {
                let i = g.idx(ix, iy);
                amps[i] *= C64::new(phi.cos(), phi.sin());
            }
        }
    }
    PolarizedField { h: ScalarField::from_parts_unchecked(g, amps), v: pf.v.clone() }
}

/// Half-wave plate rotating the analysis basis by 45 degrees:
/// `h' = (h + v)/sqrt(2)`, `v' = (v - h)/sqrt(2)`.
pub fn halfwave_rotate(pf: &PolarizedField) -> PolarizedField {
    let g = pf.h.grid();
    let n = g.len();
    let mut h = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for (a, b) in pf.h.amps().iter().zip(pf.v.amps()) {
        h.push((a + b) * FRAC_1_SQRT_2);
        v.push((b - a) * FRAC_1_SQRT_2);
    }
    PolarizedField {
        h: ScalarField::from_parts_unchecked(g, h),
        v: ScalarField::from_parts_unchecked(g, v),
    }
}

/// Separates the two polarization components into independent fields
/// (transmitted H port, reflected V port).
pub fn pbs_split(pf: &PolarizedField) -> (ScalarField, ScalarField) {
    (pf.h.clone(), pf.v.clone())
}
