//! End-to-end equivalence between the factorized coincidence engine and a
//! brute-force reference that walks the typed optical chain field by field:
//! outer-product conditional state, zero-padded Fourier lens to the SLM,
//! window crop, Jones-calculus analyzer, relay and detection. The two paths
//! share only the conditional decomposition; every optical and readout step
//! is computed independently.

use photint_core::{
    apply_idler_optics, bucket_rates, coincidence_probabilities, halfwave_rotate, image_relay,
    make_biphoton_axis, make_binary_mask, modulate, pbs_split, point_rate, prepare_diagonal,
    BinaryMaskSpec, DetectorSpec, ExperimentConfig, Grid, IdlerOptics, PhaseMask, ScalarField,
    C64,
};

/// Test bench: a coarse 64-sample crystal so the padded reference transform
/// stays small.
fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        crystal_samples: 64,
        crystal_pitch: 50e-6,
        d2: DetectorSpec::Point { position: (150e-6, 150e-6), pinhole_radius: 70e-6 },
        ..ExperimentConfig::default()
    }
}

/// Separable conditional field at the crystal for one idler sample pair.
fn conditional_field(
    heralded: &photint_core::BiphotonAxis,
    crystal: Grid,
    j: usize,
    k: usize,
) -> ScalarField {
    let (col_x, _) = heralded.conditional_column(j).unwrap();
    let (col_y, _) = heralded.conditional_column(k).unwrap();
    let n = crystal.n_x();
    let mut amps = Vec::with_capacity(n * n);
    for cy in &col_y {
        for cx in &col_x {
            amps.push(cx * cy);
        }
    }
    ScalarField::new(crystal, amps).unwrap()
}

/// Reference signal-arm propagation: embed the crystal field centered in a
/// grid `pad` times larger, transform through the Fourier lens, and keep the
/// central crystal-sized window as the SLM plane.
fn reference_slm_field(field: &ScalarField, cfg: &ExperimentConfig) -> ScalarField {
    let n = cfg.crystal_samples;
    let big = n * cfg.pad_factor;
    let padded_grid = Grid::square(big, cfg.crystal_pitch).unwrap();
    let offset = big / 2 - n / 2;
    let mut amps = vec![C64::new(0.0, 0.0); big * big];
    for iy in 0..n {
        for ix in 0..n {
            amps[(iy + offset) * big + ix + offset] = field.amp(ix, iy);
        }
    }
    let padded = ScalarField::new(padded_grid, amps).unwrap();
    let lensed = photint_core::fourier_lens(&padded, cfg.spdc.lambda_down(), cfg.signal_focal).unwrap();

    let window_grid = Grid::square(n, lensed.grid().pitch()).unwrap();
    let mut cropped = Vec::with_capacity(n * n);
    for iy in 0..n {
        for ix in 0..n {
            cropped.push(lensed.amp(ix + offset, iy + offset));
        }
    }
    ScalarField::new(window_grid, cropped).unwrap()
}

/// Analyzer ports for one SLM-plane field: diagonal preparation, phase
/// modulation, half-wave rotation, polarizing split.
fn analyzer_ports(slm: &ScalarField, mask: &PhaseMask) -> (ScalarField, ScalarField) {
    let pf = prepare_diagonal(slm);
    pbs_split(&halfwave_rotate(&modulate(&pf, mask)))
}

/// Zeroes every sample outside the mask footprint, the field-stop model of
/// clipped bucket collection.
fn clip_to_footprint(field: &ScalarField, mask: &PhaseMask) -> ScalarField {
    let g = field.grid();
    let mut amps = Vec::with_capacity(g.len());
    for iy in 0..g.n_y() {
        for ix in 0..g.n_x() {
            let keep = mask.cell_at(g.x(ix), g.y(iy)).is_some();
            amps.push(if keep { field.amp(ix, iy) } else { C64::new(0.0, 0.0) });
        }
    }
    ScalarField::new(g, amps).unwrap()
}

/// Walks the typed chain for every idler sample pair inside the D2 pinhole
/// and accumulates the two port rates, mirroring the mixture convention of
/// the engine (weights are marginal densities at the heralding plane).
fn brute_force_probabilities(cfg: &ExperimentConfig, mask: &PhaseMask) -> (f64, f64) {
    let crystal_axis = photint_core::Axis::new(cfg.crystal_samples, cfg.crystal_pitch).unwrap();
    let crystal = Grid::square(cfg.crystal_samples, cfg.crystal_pitch).unwrap();
    let source = make_biphoton_axis(&cfg.spdc, crystal_axis, crystal_axis).unwrap();
    let heralded = apply_idler_optics(&source, &cfg.idler_optics).unwrap();
    let axis_i = heralded.idler_axis();

    let (center, radius) = match cfg.d2 {
        DetectorSpec::Point { position, pinhole_radius } => (position, pinhole_radius),
        DetectorSpec::Bucket => panic!("test config uses a point D2"),
    };

    let mut p_plus = 0.0;
    let mut p_minus = 0.0;
    for k in 0..axis_i.n() {
        let dy = axis_i.coord(k) - center.1;
        for j in 0..axis_i.n() {
            let dx = axis_i.coord(j) - center.0;
            if dx * dx + dy * dy > radius * radius {
                continue;
            }
            let weight = heralded.idler_marginal(j) * heralded.idler_marginal(k);
            let slm = reference_slm_field(&conditional_field(&heralded, crystal, j, k), cfg);
            let (h, v) = analyzer_ports(&slm, mask);
            let (rp, rm) = match cfg.d1 {
                DetectorSpec::Bucket => {
                    if cfg.collection_stop {
                        bucket_rates(&clip_to_footprint(&h, mask), &clip_to_footprint(&v, mask))
                    } else {
                        bucket_rates(&h, &v)
                    }
                }
                DetectorSpec::Point { .. } => {
                    let hp = image_relay(&h, cfg.d1_magnification).unwrap();
                    let vp = image_relay(&v, cfg.d1_magnification).unwrap();
                    (point_rate(&hp, &cfg.d1).unwrap(), point_rate(&vp, &cfg.d1).unwrap())
                }
            };
            p_plus += weight * rp;
            p_minus += weight * rm;
        }
    }
    (p_plus, p_minus)
}

fn assert_probabilities_match(cfg: &ExperimentConfig, mask: &PhaseMask, label: &str) {
    let (ep, em) = coincidence_probabilities(cfg, mask).unwrap();
    let (bp, bm) = brute_force_probabilities(cfg, mask);
    let scale = bp.abs().max(bm.abs()).max(1e-30);
    assert!(
        (ep - bp).abs() <= 1e-10 * scale && (em - bm).abs() <= 1e-10 * scale,
        "{label}: engine ({ep}, {em}) vs reference ({bp}, {bm})"
    );
}

fn arms() -> [IdlerOptics; 2] {
    [IdlerOptics::Imaging { magnification: -1.0 }, IdlerOptics::FourierLens { focal: 0.25 }]
}

#[test]
fn bucket_readout_matches_the_reference_chain() {
    let mask = make_binary_mask(&BinaryMaskSpec::random(4, 4, 0.5, 11).unwrap(), 8, 8e-6).unwrap();
    for optics in arms() {
        let cfg = ExperimentConfig { idler_optics: optics, ..small_config() };
        assert_probabilities_match(&cfg, &mask, "bucket, clipped collection");

        let open = ExperimentConfig { collection_stop: false, ..cfg };
        assert_probabilities_match(&open, &mask, "bucket, open collection");
    }
}

#[test]
fn rectangular_masks_keep_rows_and_columns_straight() {
    // 3 rows by 5 columns; any row/column mixup in the factorized binning
    // would show immediately.
    let mask = make_binary_mask(&BinaryMaskSpec::random(3, 5, 0.4, 23).unwrap(), 6, 8e-6).unwrap();
    for optics in arms() {
        let cfg = ExperimentConfig { idler_optics: optics, ..small_config() };
        assert_probabilities_match(&cfg, &mask, "rectangular mask");
    }
}

#[test]
fn graded_phases_match_the_reference_chain() {
    // Non-binary phases exercise the per-cell port weights off the 0/pi
    // corners.
    let phases: Vec<f64> =
        (0..16).map(|i| 2.0 * std::f64::consts::PI * (i as f64) / 16.0).collect();
    let mask = PhaseMask::new(4, 4, phases, 8, 8e-6).unwrap();
    for optics in arms() {
        let cfg = ExperimentConfig { idler_optics: optics, ..small_config() };
        assert_probabilities_match(&cfg, &mask, "graded mask");
    }
}

#[test]
fn point_d1_readout_matches_relay_and_pinhole() {
    let mask = make_binary_mask(&BinaryMaskSpec::random(4, 4, 0.3, 7).unwrap(), 8, 8e-6).unwrap();
    for optics in arms() {
        // Unit inverting relay.
        let cfg = ExperimentConfig {
            idler_optics: optics,
            d1: DetectorSpec::Point { position: (50e-6, -30e-6), pinhole_radius: 40e-6 },
            ..small_config()
        };
        assert_probabilities_match(&cfg, &mask, "point D1, unit relay");

        // Magnifying inverting relay: detector plane coordinates scale by m.
        let mag = ExperimentConfig {
            d1_magnification: -1.5,
            d1: DetectorSpec::Point { position: (75e-6, -45e-6), pinhole_radius: 60e-6 },
            ..cfg
        };
        assert_probabilities_match(&mag, &mask, "point D1, 1.5x relay");
    }
}

#[test]
fn all_white_mask_sends_everything_to_the_plus_port() {
    let mask = PhaseMask::new(4, 4, vec![0.0; 16], 8, 8e-6).unwrap();
    for optics in arms() {
        let cfg = ExperimentConfig { idler_optics: optics, ..small_config() };
        let (p, m) = coincidence_probabilities(&cfg, &mask).unwrap();
        assert!(m.abs() <= 1e-15 * p, "minus port {m} vs plus {p}");
        let (_, bm) = brute_force_probabilities(&cfg, &mask);
        assert!(bm.abs() <= 1e-12 * p, "reference minus port {bm}");
    }
}
