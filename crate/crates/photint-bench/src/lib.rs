//! Shared fixtures for the benchmark suite: deterministic stand-ins for the
//! fields, masks and sources the hot paths consume.

use photint_core::mask::DEFAULT_PIXEL_PITCH;
use photint_core::{
    make_biphoton_axis, make_binary_mask, Axis, BinaryMaskSpec, BiphotonAxis, Grid, PhaseMask,
    ScalarField, SpdcParams, C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic pseudo-random field of `n` x `n` samples at the stock
/// crystal pitch.
pub fn stock_field(n: usize) -> ScalarField {
    let grid = Grid::square(n, 12.5e-6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let amps: Vec<C64> =
        (0..grid.len()).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
    ScalarField::new(grid, amps).unwrap()
}

/// Random half-white binary mask of `n` x `n` cells at 8 pixels per cell.
pub fn stock_mask(n: usize) -> PhaseMask {
    let spec = BinaryMaskSpec::random(n, n, 0.5, 1).unwrap();
    make_binary_mask(&spec, 8, DEFAULT_PIXEL_PITCH).unwrap()
}

/// The stock two-photon source on the full 1024-sample crystal grid.
pub fn stock_biphoton() -> BiphotonAxis {
    let axis = Axis::new(1024, 12.5e-6).unwrap();
    make_biphoton_axis(&SpdcParams::default(), axis, axis).unwrap()
}
