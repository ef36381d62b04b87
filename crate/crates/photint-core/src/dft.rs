//! Centered unitary discrete Fourier transform, the kernel behind every
//! lens transform in the crate.
//!
//! Convention: for an axis of `n` samples with centered coordinates
//! `x = j - n/2` and `k = q - n/2`,
//!
//! ```text
//! F[q] = (1/sqrt(n)) * sum_j f[j] * exp(-2*pi*i * x*k / n)
//! ```
//!
//! which is realized as swap-halves -> FFT -> swap-halves -> scale. For even
//! `n` both centering shifts are pure index permutations, so the convention
//! is exact (no phase multiplies), the transform is unitary to rounding, and
//! applying it twice is exactly the parity map `j -> (n - j) mod n`.

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

fn plan(n: usize) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<(FftPlanner<f64>, HashMap<usize, Arc<dyn Fft<f64>>>)>> =
        OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    let (planner, map) = &mut *guard;
    map.entry(n).or_insert_with(|| planner.plan_fft_forward(n)).clone()
}

/// In-place centered unitary forward DFT over `buf`.
///
/// `buf.len()` must be an even power of two (enforced upstream by `Axis`).
pub(crate) fn centered_dft(buf: &mut [C64]) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two() && n >= 2);
    buf.rotate_left(n / 2);
    plan(n).process(buf);
    buf.rotate_left(n / 2);
    let s = 1.0 / (n as f64).sqrt();
    for a in buf.iter_mut() {
        *a *= s;
    }
}

/// Centered unitary DFT of `input` zero-padded to `input.len() * pad_factor`
/// samples, returning only the central `window` output samples.
///
/// Padding refines the output sampling by `pad_factor` without changing the
/// underlying transform; the window crop keeps memory bounded when only the
/// central region is of interest. `pad_factor` must be a power of two and
/// `window <= input.len() * pad_factor`.
pub(crate) fn padded_centered_dft(input: &[C64], pad_factor: usize, window: usize) -> Vec<C64> {
    let n = input.len();
    let np = n * pad_factor;
    debug_assert!(pad_factor.is_power_of_two() && pad_factor >= 1);
    debug_assert!(window <= np && window >= 1);
    let mut buf = vec![C64::new(0.0, 0.0); np];
    // Centered embedding: input sample j (coordinate (j - n/2) * pitch) lands
    // on padded index j + (np - n)/2, which has the same coordinate.
    let off = (np - n) / 2;
    buf[off..off + n].copy_from_slice(input);
    centered_dft(&mut buf);
    let start = np / 2 - window / 2;
    buf[start..start + window].to_vec()
}

/// Parity partner of index `j` on a centered axis of `n` samples: the index
/// holding coordinate `-x` (the single edge sample `j = 0` maps to itself,
/// the usual aliasing of the unpaired `-n/2` coordinate).
pub(crate) fn parity_index(j: usize, n: usize) -> usize {
    if j == 0 {
        0
    } else {
        n - j
    }
}
