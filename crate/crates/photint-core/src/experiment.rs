//! The two heralding configurations and the full coincidence experiment.
//!
//! A run conditions the signal photon on an idler detection behind one of
//! the two arms (imaging = UNC, Fourier lens = COR), sends the heralded
//! field through the Fourier lens onto the phase mask, and counts the two
//! analyzer ports in coincidence with the herald.
//!
//! The heavy lifting happens once per configuration in
//! [`PreparedExperiment::new`]: the finite D2 pinhole turns heralding into a
//! statistical mixture over the idler samples inside the pinhole disc, and
//! because the biphoton state, the signal optics and the analyzer are all
//! separable in x and y, every mixture component is an outer product of two
//! 1D conditional amplitudes. The preparation stores each distinct 1D
//! component's intensity on the SLM sample window, after which any mask is
//! evaluated by cheap weighted sums instead of full 2D propagation. The
//! equivalence with the explicit operator chain is exact and covered by
//! integration tests.

use crate::detect::{c_plus_percent, sample_counts, visibility, DetectorSpec};
use crate::error::{Error, Result};
use crate::field::fourier_axis_windowed;
use crate::grid::Axis;
use crate::mask::{make_binary_mask, BinaryMaskSpec, PhaseMask, DEFAULT_PIXEL_PITCH};
use crate::spdc::{
    apply_idler_optics, make_biphoton_axis, IdlerOptics, SpdcParams, HERALD_MIN_PROBABILITY,
};
use rayon::prelude::*;
use std::fmt;

/// Default mask-proportion ladder of the sweep.
pub const SWEEP_FRACTIONS: [f64; 3] = [0.5, 0.3, 0.1];

/// Default mask-size ladder of the sweep.
pub const SWEEP_SIZES: [usize; 5] = [2, 4, 8, 16, 32];

/// Default number of random masks per sweep point.
pub const SWEEP_MASKS_PER_POINT: usize = 10;

/// The two idler-arm configurations as labeled in the output tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HeraldingConfig {
    /// Heralding on idler position (imaging arm).
    Unc,
    /// Heralding on idler transverse momentum (Fourier-lens arm).
    Cor,
}

impl HeraldingConfig {
    /// Classifies an idler arm.
    pub fn of(optics: &IdlerOptics) -> Self {
        match optics {
            IdlerOptics::Imaging { .. } => HeraldingConfig::Unc,
            IdlerOptics::FourierLens { .. } => HeraldingConfig::Cor,
        }
    }

    /// The idler arm this label selects under `cfg`. When the configured arm
    /// already matches it is used as-is; otherwise the counterpart defaults
    /// to a unit-magnification relay (UNC) or a lens with the signal focal
    /// length (COR).
    pub fn optics(&self, cfg: &ExperimentConfig) -> IdlerOptics {
        match (self, cfg.idler_optics) {
            (HeraldingConfig::Unc, o @ IdlerOptics::Imaging { .. }) => o,
            (HeraldingConfig::Unc, _) => IdlerOptics::Imaging { magnification: -1.0 },
            (HeraldingConfig::Cor, o @ IdlerOptics::FourierLens { .. }) => o,
            (HeraldingConfig::Cor, _) => IdlerOptics::FourierLens { focal: cfg.signal_focal },
        }
    }
}

impl fmt::Display for HeraldingConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeraldingConfig::Unc => "UNC",
            HeraldingConfig::Cor => "COR",
        })
    }
}

/// Full description of one bench setup.
///
/// Lengths in meters. The crystal sampling covers source and idler planes;
/// the signal arm reaches the SLM through a Fourier lens evaluated with
/// `pad_factor`-fold zero padding, keeping a `crystal_samples`-wide working
/// window at the finer SLM-plane pitch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    pub spdc: SpdcParams,
    /// Active idler arm for single runs; the sweep evaluates both arms.
    pub idler_optics: IdlerOptics,
    /// Focal length of the crystal-to-SLM Fourier lens.
    pub signal_focal: f64,
    /// Magnification of the SLM-to-D1 imaging relay.
    pub d1_magnification: f64,
    /// Signal-arm detector behind the analyzer.
    pub d1: DetectorSpec,
    /// Heralding detector; must be a point detector.
    pub d2: DetectorSpec,
    /// Samples per transverse axis at the crystal (power of two).
    pub crystal_samples: usize,
    pub crystal_pitch: f64,
    /// Zero-padding factor of the signal lens transform (power of two).
    pub pad_factor: usize,
    /// Clip bucket collection to the mask footprint, modeling the field stop
    /// in front of the bucket detector. Ignored for a point D1, which
    /// defines its own aperture.
    pub collection_stop: bool,
    /// Expected total coincidences per readout; 0 runs analytic, noiseless.
    pub shots: f64,
    /// Global seed for mask generation and shot sampling.
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            spdc: SpdcParams::default(),
            idler_optics: IdlerOptics::Imaging { magnification: -1.0 },
            signal_focal: 0.25,
            d1_magnification: -1.0,
            d1: DetectorSpec::Bucket,
            d2: DetectorSpec::Point { position: (150e-6, 150e-6), pinhole_radius: 50e-6 },
            crystal_samples: 1024,
            crystal_pitch: 12.5e-6,
            pad_factor: 8,
            collection_stop: true,
            shots: 0.0,
            seed: 1,
        }
    }
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if !(self.signal_focal > 0.0) || !self.signal_focal.is_finite() {
            return Err(Error::domain(format!(
                "signal focal length must be positive, got {}",
                self.signal_focal
            )));
        }
        if self.d1_magnification == 0.0 || !self.d1_magnification.is_finite() {
            return Err(Error::domain("D1 relay magnification must be nonzero"));
        }
        if self.pad_factor == 0 || !self.pad_factor.is_power_of_two() {
            return Err(Error::domain(format!(
                "pad factor must be a power of two, got {}",
                self.pad_factor
            )));
        }
        if !(self.shots >= 0.0) || !self.shots.is_finite() {
            return Err(Error::domain(format!("shot count must be nonnegative, got {}", self.shots)));
        }
        match self.d2 {
            DetectorSpec::Point { pinhole_radius, .. } if pinhole_radius > 0.0 => Ok(()),
            DetectorSpec::Point { pinhole_radius, .. } => Err(Error::domain(format!(
                "D2 pinhole radius must be positive, got {pinhole_radius}"
            ))),
            DetectorSpec::Bucket => Err(Error::domain("heralding detector D2 must be a point")),
        }
    }

    /// Copy of this setup with the idler arm selected by `arm`.
    pub fn with_arm(&self, arm: HeraldingConfig) -> ExperimentConfig {
        let mut cfg = *self;
        cfg.idler_optics = arm.optics(self);
        cfg
    }

    /// Sample pitch of the simulated SLM-plane window.
    pub fn slm_sample_pitch(&self) -> f64 {
        self.spdc.lambda_down() * self.signal_focal
            / ((self.crystal_samples * self.pad_factor) as f64 * self.crystal_pitch)
    }
}

/// One distinct heralded 1D component: the probability of its idler sample
/// and the signal intensity it produces across the SLM window.
struct Component {
    weight: f64,
    rho: Vec<f64>,
}

/// A configuration with its heralded mixture propagated to the SLM plane,
/// ready to evaluate masks.
pub struct PreparedExperiment {
    label: HeraldingConfig,
    window: Axis,
    d1: DetectorSpec,
    d1_magnification: f64,
    collection_stop: bool,
    xs: Vec<Component>,
    ys: Vec<Component>,
    /// Index pairs into `xs`/`ys` whose idler samples fall inside the D2
    /// pinhole disc.
    pairs: Vec<(usize, usize)>,
}

/// Idler samples of `axis` within `radius` of `center`; falls back to the
/// nearest sample when the radius is smaller than the sampling.
fn samples_within(axis: Axis, center: f64, radius: f64) -> Result<Vec<usize>> {
    let hits: Vec<usize> =
        (0..axis.n()).filter(|&i| (axis.coord(i) - center).abs() <= radius).collect();
    if !hits.is_empty() {
        return Ok(hits);
    }
    match axis.nearest(center) {
        Some(i) => Ok(vec![i]),
        None => Err(Error::HeraldMiss { probability: 0.0 }),
    }
}

impl PreparedExperiment {
    /// Propagates the heralded mixture of `cfg` to the SLM window.
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let (x2, y2, r2) = match cfg.d2 {
            DetectorSpec::Point { position: (x, y), pinhole_radius } => (x, y, pinhole_radius),
            DetectorSpec::Bucket => unreachable!("validated above"),
        };
        let crystal = Axis::new(cfg.crystal_samples, cfg.crystal_pitch)?;
        let source = make_biphoton_axis(&cfg.spdc, crystal, crystal)?;
        let heralded = apply_idler_optics(&source, &cfg.idler_optics)?;
        let axis_i = heralded.idler_axis();

        let sx = samples_within(axis_i, x2, r2)?;
        let sy = samples_within(axis_i, y2, r2)?;
        let mut pairs = Vec::new();
        for (a, &j) in sx.iter().enumerate() {
            let dx = axis_i.coord(j) - x2;
            for (b, &k) in sy.iter().enumerate() {
                let dy = axis_i.coord(k) - y2;
                if dx * dx + dy * dy <= r2 * r2 {
                    pairs.push((a, b));
                }
            }
        }
        if pairs.is_empty() {
            // Pinhole smaller than the diagonal sample spacing: herald on the
            // nearest sample pair, matching the point-conditioning rule.
            let j = axis_i.nearest(x2).ok_or(Error::HeraldMiss { probability: 0.0 })?;
            let k = axis_i.nearest(y2).ok_or(Error::HeraldMiss { probability: 0.0 })?;
            let a = sx.iter().position(|&s| s == j).unwrap_or(sx.len());
            let b = sy.iter().position(|&s| s == k).unwrap_or(sy.len());
            let sx = if a == sx.len() { [sx.as_slice(), &[j]].concat() } else { sx.clone() };
            let sy = if b == sy.len() { [sy.as_slice(), &[k]].concat() } else { sy.clone() };
            let (xs, window) = build_components(cfg, &heralded, crystal, &sx)?;
            let (ys, _) = build_components(cfg, &heralded, crystal, &sy)?;
            return finish_prepared(cfg, window, xs, ys, vec![(a, b)]);
        }

        let (xs, window) = build_components(cfg, &heralded, crystal, &sx)?;
        let (ys, _) = build_components(cfg, &heralded, crystal, &sy)?;
        finish_prepared(cfg, window, xs, ys, pairs)
    }

    /// Configuration label of this preparation.
    pub fn label(&self) -> HeraldingConfig {
        self.label
    }

    /// SLM-plane sampling of the stored component intensities.
    pub fn window(&self) -> Axis {
        self.window
    }

    /// Coincidence probabilities (plus port, minus port) for one mask.
    pub fn probabilities(&self, mask: &PhaseMask) -> Result<(f64, f64)> {
        match self.d1 {
            DetectorSpec::Bucket => Ok(self.bucket_probabilities(mask)),
            DetectorSpec::Point { position, pinhole_radius } => {
                self.point_probabilities(mask, position, pinhole_radius)
            }
        }
    }

    /// Bucket D1: per-port powers integrated over the collection area,
    /// factorized into per-axis mask-cell sums.
    fn bucket_probabilities(&self, mask: &PhaseMask) -> (f64, f64) {
        let rows = mask.rows();
        let cols = mask.cols();
        let bins_x: Vec<AxisBins> =
            self.xs.iter().map(|c| bin_axis(&c.rho, self.window, cols, |x| mask.col_of_x(x))).collect();
        let bins_y: Vec<AxisBins> =
            self.ys.iter().map(|c| bin_axis(&c.rho, self.window, rows, |y| mask.row_of_y(y))).collect();

        // Port weights per cell: (1 +- cos phi) / 2.
        let mut plus = Vec::with_capacity(rows * cols);
        let mut minus = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let cos = mask.phase(r, c).cos();
                plus.push((1.0 + cos) / 2.0);
                minus.push((1.0 - cos) / 2.0);
            }
        }

        let mut p_plus = 0.0;
        let mut p_minus = 0.0;
        for &(a, b) in &self.pairs {
            let w = self.xs[a].weight * self.ys[b].weight;
            let bx = &bins_x[a];
            let by = &bins_y[b];
            let mut tp = 0.0;
            let mut tm = 0.0;
            for r in 0..rows {
                let yv = by.cells[r];
                if yv == 0.0 {
                    continue;
                }
                let row_plus = &plus[r * cols..(r + 1) * cols];
                let row_minus = &minus[r * cols..(r + 1) * cols];
                for c in 0..cols {
                    let m = bx.cells[c] * yv;
                    tp += row_plus[c] * m;
                    tm += row_minus[c] * m;
                }
            }
            if !self.collection_stop {
                // Light missing the mask footprint is unmodulated and exits
                // on the plus port.
                let full = (bx.inside + bx.outside) * (by.inside + by.outside);
                tp += full - bx.inside * by.inside;
            }
            p_plus += w * tp;
            p_minus += w * tm;
        }
        (p_plus, p_minus)
    }

    /// Point D1: per-port intensity summed over the pinhole disc, mapped
    /// back through the D1 relay onto the SLM window.
    fn point_probabilities(
        &self,
        mask: &PhaseMask,
        position: (f64, f64),
        radius: f64,
    ) -> Result<(f64, f64)> {
        let m = self.d1_magnification;
        let cx = position.0 / m;
        let cy = position.1 / m;
        let r = radius / m.abs();
        let ax = self.window;
        let nx = cx.clamp(ax.min_coord(), ax.max_coord());
        let ny = cy.clamp(ax.min_coord(), ax.max_coord());
        if (nx - cx).hypot(ny - cy) > r {
            return Err(Error::domain(format!(
                "D1 pinhole at ({}, {}) maps outside the SLM window",
                position.0, position.1
            )));
        }
        let r2 = r * r;
        let n = ax.n();
        let mut p_plus = 0.0;
        let mut p_minus = 0.0;
        for t in 0..n {
            let dy = ax.coord(t) - cy;
            if dy * dy > r2 {
                continue;
            }
            for s in 0..n {
                let dx = ax.coord(s) - cx;
                if dx * dx + dy * dy > r2 {
                    continue;
                }
                let mut dens = 0.0;
                for &(a, b) in &self.pairs {
                    dens += self.xs[a].weight
                        * self.ys[b].weight
                        * self.xs[a].rho[s]
                        * self.ys[b].rho[t];
                }
                let cos = mask.phase_at(ax.coord(s), ax.coord(t)).cos();
                p_plus += dens * (1.0 + cos) / 2.0;
                p_minus += dens * (1.0 - cos) / 2.0;
            }
        }
        let measure = ax.pitch() * ax.pitch();
        Ok((p_plus * measure, p_minus * measure))
    }
}

/// Per-axis intensity of one component binned into mask cells, plus the
/// remainder of the window outside the footprint. Includes the sampling
/// measure, so `inside + outside` is the component's 1D window power.
struct AxisBins {
    cells: Vec<f64>,
    inside: f64,
    outside: f64,
}

fn bin_axis(
    rho: &[f64],
    window: Axis,
    n_cells: usize,
    cell_of: impl Fn(f64) -> Option<usize>,
) -> AxisBins {
    let mut cells = vec![0.0; n_cells];
    let mut outside = 0.0;
    for (i, &p) in rho.iter().enumerate() {
        match cell_of(window.coord(i)) {
            Some(c) => cells[c] += p,
            None => outside += p,
        }
    }
    for c in cells.iter_mut() {
        *c *= window.pitch();
    }
    AxisBins { inside: cells.iter().sum(), cells, outside: outside * window.pitch() }
}

/// Conditional SLM-window intensities for the idler samples in `which`.
fn build_components(
    cfg: &ExperimentConfig,
    heralded: &crate::spdc::BiphotonAxis,
    crystal: Axis,
    which: &[usize],
) -> Result<(Vec<Component>, Axis)> {
    let mut out = Vec::with_capacity(which.len());
    let mut window = None;
    for &i in which {
        let weight = heralded.idler_marginal(i);
        if weight < HERALD_MIN_PROBABILITY {
            // A pinhole sample in the far tail contributes nothing the
            // conditional state could resolve; drop it from the mixture.
            out.push(Component { weight: 0.0, rho: Vec::new() });
            continue;
        }
        let (col, _) = heralded.conditional_column(i)?;
        let (axis, amps) = fourier_axis_windowed(
            &col,
            crystal,
            cfg.spdc.lambda_down(),
            cfg.signal_focal,
            cfg.pad_factor,
            cfg.crystal_samples,
        )?;
        window = Some(axis);
        out.push(Component { weight, rho: amps.iter().map(|a| a.norm_sqr()).collect() });
    }
    let window = window.ok_or(Error::HeraldMiss { probability: 0.0 })?;
    // Zero-weight placeholders get a zero intensity of the right length so
    // pair evaluation stays uniform.
    let n = window.n();
    for c in out.iter_mut() {
        if c.rho.is_empty() {
            c.rho = vec![0.0; n];
        }
    }
    Ok((out, window))
}

fn finish_prepared(
    cfg: &ExperimentConfig,
    window: Axis,
    xs: Vec<Component>,
    ys: Vec<Component>,
    pairs: Vec<(usize, usize)>,
) -> Result<PreparedExperiment> {
    let total: f64 = pairs.iter().map(|&(a, b)| xs[a].weight * ys[b].weight).sum();
    if total < HERALD_MIN_PROBABILITY {
        return Err(Error::HeraldMiss { probability: total });
    }
    Ok(PreparedExperiment {
        label: HeraldingConfig::of(&cfg.idler_optics),
        window,
        d1: cfg.d1,
        d1_magnification: cfg.d1_magnification,
        collection_stop: cfg.collection_stop,
        xs,
        ys,
        pairs,
    })
}

/// Runs the full chain for one mask under the configured idler arm.
///
/// The chain is herald (conditioned on D2) -> Fourier lens to the SLM ->
/// diagonal preparation -> phase modulation -> half-wave rotation -> relay
/// to D1 -> analyzer ports, returning the coincidence probabilities
/// (plus port, minus port) with `p+ + p- <= 1`.
///
/// For repeated evaluations under one configuration build a
/// [`PreparedExperiment`] once instead.
pub fn coincidence_probabilities(cfg: &ExperimentConfig, mask: &PhaseMask) -> Result<(f64, f64)> {
    PreparedExperiment::new(cfg)?.probabilities(mask)
}

/// One row of the proportion sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub config: HeraldingConfig,
    /// White fraction requested of the mask.
    pub fraction: f64,
    /// Mask dimension N (N x N cells).
    pub size: usize,
    /// Seed the mask was generated from.
    pub seed: u64,
    pub c_plus: f64,
    pub c_minus: f64,
    pub c_plus_pct: f64,
}

/// One row of the visibility scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub config: HeraldingConfig,
    /// D2 vertical position in meters.
    pub d2: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    pub visibility: f64,
}

/// Mask cell size in SLM pixels for an N x N sweep mask, keeping the mask
/// footprint near 64 pixels across.
pub fn sweep_cell_pixels(size: usize) -> usize {
    ((64.0 / size as f64).round() as usize).max(1)
}

const SWEEP_STREAM: u64 = 0x73_77_65_65_70; // "sweep"
const SCAN_STREAM: u64 = 0x73_63_61_6e; // "scan"

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-row sampling seed, independent of evaluation order and thread count.
fn derive_seed(global: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(global ^ stream) ^ index)
}

/// Sweeps random binary masks over proportions and sizes, in both
/// heralding configurations.
///
/// For every (p, N) point, `masks_per_point` random masks are generated with
/// seeds `cfg.seed + k`; the same masks are evaluated under UNC and COR so
/// the two configurations can be compared per mask. Rows come back in
/// canonical order (configuration, fraction, size, mask index) regardless of
/// worker scheduling. With `cfg.shots > 0` each row draws Poisson counts on
/// its own derived seed; otherwise rows carry analytic rates.
pub fn run_proportion_sweep(
    cfg: &ExperimentConfig,
    fractions: &[f64],
    sizes: &[usize],
    masks_per_point: usize,
) -> Result<Vec<SweepRow>> {
    for &p in fractions {
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            return Err(Error::domain(format!("mask fraction must lie in [0, 1], got {p}")));
        }
    }
    if sizes.iter().any(|&n| n == 0) {
        return Err(Error::domain("mask sizes must be at least 1"));
    }
    if fractions.is_empty() || sizes.is_empty() || masks_per_point == 0 {
        return Err(Error::domain("sweep needs at least one fraction, size and mask"));
    }

    let arms = [HeraldingConfig::Unc, HeraldingConfig::Cor];
    let preps = [
        PreparedExperiment::new(&cfg.with_arm(arms[0]))?,
        PreparedExperiment::new(&cfg.with_arm(arms[1]))?,
    ];

    let mut jobs = Vec::new();
    for (ai, &arm) in arms.iter().enumerate() {
        for &p in fractions {
            for &n in sizes {
                for k in 0..masks_per_point {
                    jobs.push((ai, arm, p, n, k));
                }
            }
        }
    }

    jobs.par_iter()
        .enumerate()
        .map(|(row_idx, &(ai, arm, p, n, k))| {
            let mask_seed = cfg.seed.wrapping_add(k as u64);
            let spec = BinaryMaskSpec::random(n, n, p, mask_seed)?;
            let mask = make_binary_mask(&spec, sweep_cell_pixels(n), DEFAULT_PIXEL_PITCH)?;
            let (p_plus, p_minus) = preps[ai].probabilities(&mask)?;
            let (c_plus, c_minus, pct) = if cfg.shots > 0.0 {
                let seed = derive_seed(cfg.seed, SWEEP_STREAM, row_idx as u64);
                let rec = sample_counts(p_plus, p_minus, cfg.shots, seed)?;
                (rec.c_plus as f64, rec.c_minus as f64, c_plus_percent(&rec)?)
            } else {
                let total = p_plus + p_minus;
                if total == 0.0 {
                    return Err(Error::UndefinedReadout);
                }
                (p_plus, p_minus, 100.0 * (p_plus / total))
            };
            Ok(SweepRow {
                config: arm,
                fraction: p,
                size: n,
                seed: mask_seed,
                c_plus,
                c_minus,
                c_plus_pct: pct,
            })
        })
        .collect()
}

/// Scans D2 vertically across `d2_positions` with a fixed stripe mask,
/// recording the port visibility at each stop.
///
/// D1 must be a point detector in the relayed SLM plane; the configured
/// idler arm is used as-is. Each position re-prepares the heralded mixture
/// (the D2 pinhole moves) and positions evaluate in parallel with
/// order-independent per-position sampling seeds.
pub fn run_visibility_scan(
    cfg: &ExperimentConfig,
    stripe_mask: &PhaseMask,
    d2_positions: &[f64],
) -> Result<Vec<ScanRow>> {
    cfg.validate()?;
    if !matches!(cfg.d1, DetectorSpec::Point { .. }) {
        return Err(Error::domain("visibility scan needs a point detector at D1"));
    }
    let (x2, r2) = match cfg.d2 {
        DetectorSpec::Point { position: (x, _), pinhole_radius } => (x, pinhole_radius),
        DetectorSpec::Bucket => unreachable!("validated above"),
    };
    let label = HeraldingConfig::of(&cfg.idler_optics);

    d2_positions
        .par_iter()
        .enumerate()
        .map(|(idx, &y)| {
            let mut moved = *cfg;
            moved.d2 = DetectorSpec::Point { position: (x2, y), pinhole_radius: r2 };
            let (p_plus, p_minus) = PreparedExperiment::new(&moved)?.probabilities(stripe_mask)?;
            let (c_plus, c_minus, v) = if cfg.shots > 0.0 {
                let seed = derive_seed(cfg.seed, SCAN_STREAM, idx as u64);
                let rec = sample_counts(p_plus, p_minus, cfg.shots, seed)?;
                (rec.c_plus as f64, rec.c_minus as f64, visibility(&rec)?)
            } else {
                let total = p_plus + p_minus;
                if total == 0.0 {
                    return Err(Error::UndefinedReadout);
                }
                (p_plus, p_minus, (p_plus - p_minus) / total)
            };
            Ok(ScanRow { config: label, d2: y, c_plus, c_minus, visibility: v })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::MaskLayout;

    fn random_mask(n: usize, p: f64, seed: u64) -> PhaseMask {
        let spec = BinaryMaskSpec::random(n, n, p, seed).unwrap();
        make_binary_mask(&spec, sweep_cell_pixels(n), DEFAULT_PIXEL_PITCH).unwrap()
    }

    fn imprinted_pct(mask: &PhaseMask) -> f64 {
        100.0 * mask.fraction_white()
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::default();
        cfg.d2 = DetectorSpec::Bucket;
        assert!(PreparedExperiment::new(&cfg).is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.shots = -1.0;
        assert!(PreparedExperiment::new(&cfg).is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.pad_factor = 3;
        assert!(PreparedExperiment::new(&cfg).is_err());
    }

    #[test]
    fn with_arm_selects_the_requested_optics() {
        let cfg = ExperimentConfig::default();
        assert_eq!(
            cfg.with_arm(HeraldingConfig::Unc).idler_optics,
            IdlerOptics::Imaging { magnification: -1.0 }
        );
        assert_eq!(
            cfg.with_arm(HeraldingConfig::Cor).idler_optics,
            IdlerOptics::FourierLens { focal: cfg.signal_focal }
        );
        let cor = cfg.with_arm(HeraldingConfig::Cor);
        assert_eq!(cor.with_arm(HeraldingConfig::Cor).idler_optics, cor.idler_optics);
        assert_eq!(format!("{}", HeraldingConfig::Unc), "UNC");
        assert_eq!(format!("{}", HeraldingConfig::Cor), "COR");
    }

    #[test]
    fn unc_bucket_reads_the_imprinted_fraction() {
        let cfg = ExperimentConfig::default();
        let prep = PreparedExperiment::new(&cfg).unwrap();
        assert_eq!(prep.label(), HeraldingConfig::Unc);
        let mask = random_mask(8, 0.5, 1);
        let (p_plus, p_minus) = prep.probabilities(&mask).unwrap();
        assert!(p_plus > 0.0 && p_minus > 0.0);
        assert!(p_plus + p_minus <= 1.0 + 1e-9);
        let pct = 100.0 * p_plus / (p_plus + p_minus);
        assert!((pct - imprinted_pct(&mask)).abs() < 2.0, "pct {pct}");
    }

    #[test]
    fn all_white_mask_leaves_the_minus_port_dark() {
        for arm in [HeraldingConfig::Unc, HeraldingConfig::Cor] {
            let cfg = ExperimentConfig::default().with_arm(arm);
            let mask = random_mask(4, 1.0, 9);
            let (p_plus, p_minus) = coincidence_probabilities(&cfg, &mask).unwrap();
            assert!(p_minus / (p_plus + p_minus) <= 1e-6, "{arm}: {p_minus}");
        }
    }

    #[test]
    fn cor_deviates_more_than_unc_on_a_sparse_mask() {
        let mut cfg = ExperimentConfig::default();
        cfg.d2 = DetectorSpec::Point { position: (0.0, 0.0), pinhole_radius: 50e-6 };
        let mask = random_mask(4, 0.1, 5);
        let target = imprinted_pct(&mask);
        let (up, um) = coincidence_probabilities(&cfg.with_arm(HeraldingConfig::Unc), &mask).unwrap();
        let (cp, cm) = coincidence_probabilities(&cfg.with_arm(HeraldingConfig::Cor), &mask).unwrap();
        let unc_dev = (100.0 * up / (up + um) - target).abs();
        let cor_dev = (100.0 * cp / (cp + cm) - target).abs();
        assert!(unc_dev < cor_dev, "UNC {unc_dev} vs COR {cor_dev}");
    }

    #[test]
    fn sweep_rows_come_back_in_canonical_order() {
        let mut cfg = ExperimentConfig::default();
        cfg.seed = 11;
        let rows = run_proportion_sweep(&cfg, &[1.0], &[1], 2).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].config, HeraldingConfig::Unc);
        assert_eq!(rows[3].config, HeraldingConfig::Cor);
        for row in &rows {
            assert_eq!(row.size, 1);
            // A single all-white cell sends everything to the plus port.
            assert_eq!(row.c_plus_pct, 100.0);
        }
        assert_eq!(rows[0].seed, 11);
        assert_eq!(rows[1].seed, 12);

        let again = run_proportion_sweep(&cfg, &[1.0], &[1], 2).unwrap();
        assert_eq!(rows, again);
    }

    #[test]
    fn sweep_rejects_bad_inputs() {
        let cfg = ExperimentConfig::default();
        assert!(run_proportion_sweep(&cfg, &[1.5], &[2], 1).is_err());
        assert!(run_proportion_sweep(&cfg, &[0.5], &[0], 1).is_err());
        assert!(run_proportion_sweep(&cfg, &[0.5], &[2], 0).is_err());
        assert!(run_proportion_sweep(&cfg, &[], &[2], 1).is_err());
    }

    #[test]
    fn sampled_sweep_tracks_the_analytic_rates() {
        let mut cfg = ExperimentConfig::default();
        let analytic = run_proportion_sweep(&cfg, &[0.5], &[4], 1).unwrap();
        cfg.shots = 1e8;
        let sampled = run_proportion_sweep(&cfg, &[0.5], &[4], 1).unwrap();
        for (a, s) in analytic.iter().zip(&sampled) {
            assert!((a.c_plus_pct - s.c_plus_pct).abs() < 0.1, "{} vs {}", a.c_plus_pct, s.c_plus_pct);
            assert_eq!(s.c_plus.fract(), 0.0);
        }
    }

    #[test]
    fn scan_labels_and_bounds() {
        let mut cfg = ExperimentConfig::default().with_arm(HeraldingConfig::Cor);
        cfg.d1 = DetectorSpec::Point { position: (0.0, 0.0), pinhole_radius: 560e-6 };
        cfg.d2 = DetectorSpec::Point { position: (0.0, 0.0), pinhole_radius: 50e-6 };
        let spec = BinaryMaskSpec::stripes(3, 3, 1).unwrap();
        let mask = make_binary_mask(&spec, 70, DEFAULT_PIXEL_PITCH).unwrap();
        let positions = [-100e-6, 0.0, 100e-6];
        let rows = run_visibility_scan(&cfg, &mask, &positions).unwrap();
        assert_eq!(rows.len(), 3);
        for (row, &pos) in rows.iter().zip(&positions) {
            assert_eq!(row.config, HeraldingConfig::Cor);
            assert_eq!(row.d2, pos);
            assert!((-1.0..=1.0).contains(&row.visibility));
        }

        let mut bucket_d1 = cfg;
        bucket_d1.d1 = DetectorSpec::Bucket;
        assert!(run_visibility_scan(&bucket_d1, &mask, &positions).is_err());
    }

    #[test]
    fn point_d1_outside_window_errors() {
        let mut cfg = ExperimentConfig::default();
        cfg.d1 = DetectorSpec::Point { position: (5e-3, 0.0), pinhole_radius: 10e-6 };
        let mask = random_mask(2, 0.5, 1);
        assert!(coincidence_probabilities(&cfg, &mask).is_err());
    }

    #[test]
    fn cell_pixel_ladder_targets_a_fixed_footprint() {
        assert_eq!(sweep_cell_pixels(1), 64);
        assert_eq!(sweep_cell_pixels(2), 32);
        assert_eq!(sweep_cell_pixels(8), 8);
        assert_eq!(sweep_cell_pixels(32), 2);
        assert_eq!(sweep_cell_pixels(64), 1);
        assert_eq!(sweep_cell_pixels(100), 1);
    }

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        let a = derive_seed(1, SWEEP_STREAM, 0);
        assert_eq!(a, derive_seed(1, SWEEP_STREAM, 0));
        let mut seen = std::collections::HashSet::new();
        for g in 0..4u64 {
            for i in 0..64u64 {
                assert!(seen.insert(derive_seed(g, SWEEP_STREAM, i)));
                assert!(seen.insert(derive_seed(g, SCAN_STREAM, i)));
            }
        }
    }

    #[test]
    fn stripe_layout_is_available_for_scans() {
        let spec = BinaryMaskSpec::stripes(3, 3, 1).unwrap();
        assert!(matches!(spec.layout, MaskLayout::Stripes { period_cells: 1 }));
    }
}
