//! Simulation of an optical integrator built from heralded single photons.
//!
//! The model covers the full bench: a type-I SPDC source emitting
//! position-correlated photon pairs, idler-side heralding optics (imaging or
//! Fourier), a Fourier lens relaying the heralded signal photon onto a phase
//! SLM, a half-wave-plate / polarizing-beam-splitter readout that converts
//! phase modulation into the two port intensities, and coincidence counting
//! with optional Poisson shot noise.
//!
//! Layering, bottom to top:
//!
//! * [`grid`], [`field`]: physical sample grids, complex scalar fields and
//!   the two unitary optical transforms (Fourier lens, imaging relay).
//! * [`polarization`], [`mask`], [`integrator`]: the Jones-calculus SLM
//!   pipeline, phase-mask construction and the trace-estimation readout.
//! * [`spdc`]: the biphoton amplitude, heralding and its diagnostics.
//! * [`detect`], [`experiment`]: detector models, coincidence probabilities
//!   and the two experiment drivers (proportion sweep, visibility scan).
//!
//! All values are immutable after construction and all operations are pure,
//! so everything here is safe to evaluate from parallel workers; results do
//! not depend on thread count.

pub mod detect;
mod dft;
pub mod error;
pub mod experiment;
pub mod field;
pub mod grid;
pub mod integrator;
pub mod mask;
pub mod phif;
pub mod polarization;
pub mod spdc;

pub use detect::{c_plus_percent, point_rate, sample_counts, visibility, CoincidenceRecord, DetectorSpec};
pub use error::{Error, Result};
pub use experiment::{
    coincidence_probabilities, run_proportion_sweep, run_visibility_scan, sweep_cell_pixels,
    ExperimentConfig, HeraldingConfig, PreparedExperiment, ScanRow, SweepRow, SWEEP_FRACTIONS,
    SWEEP_MASKS_PER_POINT, SWEEP_SIZES,
};
pub use field::{fourier_lens, gaussian_beam, image_relay, plane_wave, total_power, ScalarField};
pub use grid::{Axis, Grid};
pub use integrator::{bucket_rates, dqc1_sigma_x, integral_readout, Dqc1Result};
pub use mask::{encode_function, make_binary_mask, BinaryMaskSpec, MaskLayout, PhaseMask};
pub use polarization::{halfwave_rotate, modulate, pbs_split, prepare_diagonal, PolarizedField};
pub use spdc::{
    apply_idler_optics, conditional_width, herald_signal, make_biphoton_axis, schmidt_number,
    BiphotonAxis, IdlerOptics, SpdcParams, HERALD_MIN_PROBABILITY,
};

/// Complex amplitude type used throughout.
pub type C64 = num_complex::Complex64;
