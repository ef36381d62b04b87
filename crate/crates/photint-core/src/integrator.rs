//! Readout of the optical integral from the two PBS ports, and the
//! equivalent one-clean-qubit trace estimator evaluated directly on a mask.

use crate::error::{Error, Result};
use crate::field::{total_power, ScalarField};
use crate::mask::PhaseMask;

/// Bucket-detector intensities of the two ports: `(I_H, I_V)`.
///
/// For plane-wave illumination of a mask that tiles the grid exactly these
/// are proportional to `sum_cells (1 + cos phi)` and `sum_cells (1 - cos phi)`.
pub fn bucket_rates(port_h: &ScalarField, port_v: &ScalarField) -> (f64, f64) {
    (total_power(port_h), total_power(port_v))
}

/// Normalized integral readout `T = (I_H - I_V) / (I_H + I_V)`.
///
/// For a mask encoding samples `g` via `phi = acos(g)` under plane-wave
/// illumination, `T` equals the cell average of `g`.
pub fn integral_readout(i_h: f64, i_v: f64) -> Result<f64> {
    if !(i_h + i_v > 0.0) {
        return Err(Error::UndefinedReadout);
    }
    Ok((i_h - i_v) / (i_h + i_v))
}

/// Result of the one-clean-qubit trace estimation on a diagonal unitary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dqc1Result {
    /// Expectation value of the Pauli X on the control qubit: the normalized
    /// real part of `tr(diag(exp(i phi_ij)))`.
    pub sigma_x: f64,
    /// The normalization constant applied to the trace, `1/(rows*cols)`.
    pub normalization: f64,
}

/// Trace estimator: `sigma_x = (1/(rows*cols)) * sum_ij cos(phi_ij)`.
pub fn dqc1_sigma_x(mask: &PhaseMask) -> Dqc1Result {
    let n = (mask.rows() * mask.cols()) as f64;
    let sum: f64 = mask.phases().iter().map(|p| p.cos()).sum();
    Dqc1Result { sigma_x: sum / n, normalization: 1.0 / n }
}
