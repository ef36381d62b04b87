//! TOML configuration schema.
//!
//! Every section is optional and falls back to the built-in bench defaults;
//! unknown keys are hard errors since a silently ignored typo in a physics
//! parameter is worse than a rejected file. Keys carry their unit in the
//! name (`_um`, `_mm`, `_nm`); everything is converted to meters here and
//! only here.

use anyhow::{bail, Context};
use photint_core::{
    make_binary_mask, BinaryMaskSpec, DetectorSpec, ExperimentConfig, IdlerOptics, PhaseMask,
    SpdcParams,
};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub grid: GridSection,
    pub spdc: SpdcSection,
    pub signal: SignalSection,
    pub idler: IdlerSection,
    pub d1: D1Section,
    pub d2: D2Section,
    pub sweep: SweepSection,
    pub visibility: VisibilitySection,
    pub run: RunSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    /// Samples per transverse axis at the crystal.
    pub n: usize,
    pub pitch_um: f64,
    /// Zero-padding factor of the crystal-to-SLM transform.
    pub pad_factor: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { n: 1024, pitch_um: 12.5, pad_factor: 8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpdcSection {
    pub pump_waist_um: f64,
    pub correlation_width_um: f64,
    pub lambda_pump_nm: f64,
    pub lambda_down_nm: f64,
}

impl Default for SpdcSection {
    fn default() -> Self {
        SpdcSection {
            pump_waist_um: 500.0,
            correlation_width_um: 25.0,
            lambda_pump_nm: 405.0,
            lambda_down_nm: 810.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SignalSection {
    /// Crystal-to-SLM Fourier lens.
    pub focal_mm: f64,
    /// SLM-to-D1 relay magnification.
    pub d1_magnification: f64,
}

impl Default for SignalSection {
    fn default() -> Self {
        SignalSection { focal_mm: 250.0, d1_magnification: -1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpticsKind {
    Imaging,
    Fourier,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdlerSection {
    pub optics: OpticsKind,
    /// Used when `optics = "imaging"`.
    pub magnification: f64,
    /// Used when `optics = "fourier"`.
    pub focal_mm: f64,
}

impl Default for IdlerSection {
    fn default() -> Self {
        IdlerSection { optics: OpticsKind::Imaging, magnification: -1.0, focal_mm: 250.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Bucket,
    Point,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct D1Section {
    pub detector: DetectorKind,
    /// Point-detector position; ignored for a bucket.
    pub x_um: f64,
    pub y_um: f64,
    pub pinhole_um: f64,
    /// Clip bucket collection to the mask footprint.
    pub collection_stop: bool,
}

impl Default for D1Section {
    fn default() -> Self {
        D1Section {
            detector: DetectorKind::Bucket,
            x_um: 0.0,
            y_um: 0.0,
            pinhole_um: 50.0,
            collection_stop: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct D2Section {
    pub x_um: f64,
    pub y_um: f64,
    pub pinhole_um: f64,
}

impl Default for D2Section {
    fn default() -> Self {
        D2Section { x_um: 150.0, y_um: 150.0, pinhole_um: 50.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub fractions: Vec<f64>,
    pub sizes: Vec<usize>,
    pub masks_per_point: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            fractions: photint_core::SWEEP_FRACTIONS.to_vec(),
            sizes: photint_core::SWEEP_SIZES.to_vec(),
            masks_per_point: photint_core::SWEEP_MASKS_PER_POINT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StripeChoice {
    White,
    Black,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VisibilitySection {
    /// SLM pixels per stripe.
    pub stripe_pixels: usize,
    pub stripe_rows: usize,
    pub stripe_cols: usize,
    /// Which stripe D1 sits on: the first white row or the neighbouring
    /// black row.
    pub d1_stripe: StripeChoice,
    pub steps: usize,
    /// Scan half-width around the D2 position facing D1.
    pub halfwidth_um: f64,
    pub d1_pinhole_um: f64,
}

impl Default for VisibilitySection {
    fn default() -> Self {
        VisibilitySection {
            stripe_pixels: 70,
            stripe_rows: 3,
            stripe_cols: 3,
            d1_stripe: StripeChoice::White,
            steps: 29,
            halfwidth_um: 560.0,
            d1_pinhole_um: 560.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Expected total coincidences per readout; 0 is analytic mode.
    pub shots: f64,
    pub seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { shots: 0.0, seed: 1 }
    }
}

// Dividing by the power of ten (exactly representable, one correctly
// rounded operation) reproduces the same f64 a direct literal in metres
// would give; multiplying by 1e-6 would be off by an ulp.
fn um(x: f64) -> f64 {
    x / 1e6
}

fn mm(x: f64) -> f64 {
    x / 1e3
}

fn nm(x: f64) -> f64 {
    x / 1e9
}

impl Config {
    /// Reads a configuration file, accepting either a bare config or a run
    /// manifest written by a previous invocation.
    pub fn load(path: &Path) -> anyhow::Result<Config> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let probe: toml::Table = text
            .parse()
            .with_context(|| format!("config file {} is not valid TOML", path.display()))?;
        let parsed = if probe.contains_key("config") {
            toml::from_str::<crate::manifest::Manifest>(&text).map(|m| m.config)
        } else {
            toml::from_str::<Config>(&text)
        };
        parsed.with_context(|| format!("invalid configuration in {}", path.display()))
    }

    /// The resolved bench description this config denotes.
    pub fn experiment(&self) -> anyhow::Result<ExperimentConfig> {
        let spdc = SpdcParams::new(
            um(self.spdc.pump_waist_um),
            um(self.spdc.correlation_width_um),
            nm(self.spdc.lambda_pump_nm),
            nm(self.spdc.lambda_down_nm),
        )
        .context("invalid [spdc] section")?;

        let idler_optics = match self.idler.optics {
            OpticsKind::Imaging => IdlerOptics::Imaging { magnification: self.idler.magnification },
            OpticsKind::Fourier => IdlerOptics::FourierLens { focal: mm(self.idler.focal_mm) },
        };

        let d1 = match self.d1.detector {
            DetectorKind::Bucket => DetectorSpec::Bucket,
            DetectorKind::Point => DetectorSpec::Point {
                position: (um(self.d1.x_um), um(self.d1.y_um)),
                pinhole_radius: um(self.d1.pinhole_um),
            },
        };

        Ok(ExperimentConfig {
            spdc,
            idler_optics,
            signal_focal: mm(self.signal.focal_mm),
            d1_magnification: self.signal.d1_magnification,
            d1,
            d2: DetectorSpec::Point {
                position: (um(self.d2.x_um), um(self.d2.y_um)),
                pinhole_radius: um(self.d2.pinhole_um),
            },
            crystal_samples: self.grid.n,
            crystal_pitch: um(self.grid.pitch_um),
            pad_factor: self.grid.pad_factor,
            collection_stop: self.d1.collection_stop,
            shots: self.run.shots,
            seed: self.run.seed,
        })
    }

    /// Stripe mask, D1 detector and D2 scan positions of the visibility
    /// measurement this config describes.
    ///
    /// The stripe mask alternates white and black rows starting white. D1 is
    /// imaged onto the centre of the first white row or its black
    /// neighbour; the D2 scan covers `steps` positions of half-width
    /// `halfwidth_um` around the point facing the D1 pinhole through both
    /// lens systems.
    pub fn visibility_geometry(&self) -> anyhow::Result<(PhaseMask, DetectorSpec, Vec<f64>)> {
        let v = &self.visibility;
        if v.steps == 0 {
            bail!("[visibility] steps must be at least 1");
        }
        if v.stripe_rows < 2 {
            bail!("[visibility] stripe_rows must be at least 2 to contain both stripe colours");
        }
        let spec = BinaryMaskSpec::stripes(v.stripe_rows, v.stripe_cols, 1)
            .context("invalid [visibility] stripe layout")?;
        let mask = make_binary_mask(&spec, v.stripe_pixels, photint_core::mask::DEFAULT_PIXEL_PITCH)
            .context("invalid [visibility] stripe mask")?;

        let stripe = mask.cell_size();
        // Row r is centred at (r - (rows-1)/2) * stripe; row 0 is white and
        // row 1 black by construction.
        let row = match v.d1_stripe {
            StripeChoice::White => 0.0,
            StripeChoice::Black => 1.0,
        };
        let y_slm = (row - (v.stripe_rows as f64 - 1.0) / 2.0) * stripe;
        let m = self.signal.d1_magnification;
        let d1 = DetectorSpec::Point {
            position: (0.0, m * y_slm),
            pinhole_radius: um(v.d1_pinhole_um),
        };

        // A D2 detection at u puts the heralded spot at -u * f_signal/f_idler
        // on the SLM (Fourier idler arm), so the position facing the D1
        // pinhole is the one mapping onto y_slm.
        let f_ratio = match self.idler.optics {
            OpticsKind::Fourier => (mm(self.idler.focal_mm)) / (mm(self.signal.focal_mm)),
            OpticsKind::Imaging => 1.0,
        };
        let center = -y_slm * f_ratio;
        let half = um(v.halfwidth_um);
        let positions = if v.steps == 1 {
            vec![center]
        } else {
            (0..v.steps)
                .map(|i| center - half + 2.0 * half * i as f64 / (v.steps - 1) as f64)
                .collect()
        };
        Ok((mask, d1, positions))
    }
}
