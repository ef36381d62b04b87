//! Detectors and counting statistics.
//!
//! Fields carry probability density; a detector turns one into a rate. A
//! bucket detector integrates the whole plane, a point detector integrates
//! the samples inside its pinhole disc. Coincidence counting is modeled as
//! independent Poisson draws on the two analyzer ports.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

/// Detection geometry at a measurement plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectorSpec {
    /// Pinhole of the given radius centered at `position` (meters).
    Point { position: (f64, f64), pinhole_radius: f64 },
    /// Large-area detector collecting the whole plane.
    Bucket,
}

/// Coincidence counts on the two analyzer ports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoincidenceRecord {
    pub c_plus: u64,
    pub c_minus: u64,
}

/// Probability collected by a point detector from `field`, summing
/// `|a|^2 * pitch^2` over the samples inside the pinhole disc.
///
/// A disc that misses the sampled region entirely is a configuration error;
/// one that merely hangs over the edge is integrated over the samples that
/// exist. For bucket detection integrate the whole plane with
/// [`total_power`] instead.
pub fn point_rate(field: &ScalarField, det: &DetectorSpec) -> Result<f64> {
    let (cx, cy, r) = match det {
        DetectorSpec::Bucket => {
            return Err(Error::domain("point_rate needs a point detector, got a bucket"));
        }
        DetectorSpec::Point { position: (x, y), pinhole_radius } => (*x, *y, *pinhole_radius),
    };
    if !(r > 0.0) || !r.is_finite() || !cx.is_finite() || !cy.is_finite() {
        return Err(Error::domain(format!(
            "point detector needs finite center and positive radius, got ({cx}, {cy}) r={r}"
        )));
    }
    let grid = field.grid();
    let ax = grid.x_axis();
    let ay = grid.y_axis();
    let nx = cx.clamp(ax.min_coord(), ax.max_coord());
    let ny = cy.clamp(ay.min_coord(), ay.max_coord());
    if (nx - cx).hypot(ny - cy) > r {
        return Err(Error::domain(format!(
            "detector disc at ({cx}, {cy}) with radius {r} lies outside the sampled plane"
        )));
    }
    let r2 = r * r;
    let mut sum = 0.0;
    for iy in 0..grid.n_y() {
        let dy = grid.y(iy) - cy;
        if dy * dy > r2 {
            continue;
        }
        for ix in 0..grid.n_x() {
            let dx = grid.x(ix) - cx;
            if dx * dx + dy * dy <= r2 {
                sum += field.amp(ix, iy).norm_sqr();
            }
        }
    }
    Ok(sum * grid.pitch() * grid.pitch())
}

/// Draws coincidence counts for a run expecting `shots` total coincidences.
///
/// The two ports count independently: `c_plus ~ Poisson(shots * p+ / (p+ + p-))`
/// and likewise for the minus port, on separate streams of a ChaCha-seeded
/// generator so the draws are reproducible and uncorrelated. Both rates zero
/// means no readout is defined for any number of shots.
pub fn sample_counts(p_plus: f64, p_minus: f64, shots: f64, seed: u64) -> Result<CoincidenceRecord> {
    for (name, p) in [("p_plus", p_plus), ("p_minus", p_minus)] {
        if !(p >= 0.0) || !p.is_finite() {
            return Err(Error::domain(format!("{name} must be a nonnegative rate, got {p}")));
        }
    }
    if !(shots >= 0.0) || !shots.is_finite() {
        return Err(Error::domain(format!("shot count must be nonnegative, got {shots}")));
    }
    let total = p_plus + p_minus;
    if total == 0.0 {
        return Err(Error::UndefinedReadout);
    }
    let draw = |p: f64, stream: u64| -> u64 {
        let mean = shots * p / total;
        if mean == 0.0 {
            return 0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let dist = Poisson::new(mean).expect("positive finite mean");
        dist.sample(&mut rng) as u64
    };
    Ok(CoincidenceRecord { c_plus: draw(p_plus, 0), c_minus: draw(p_minus, 1) })
}

/// Percentage of coincidences landing on the plus port,
/// `100 * c_plus / (c_plus + c_minus)`.
pub fn c_plus_percent(rec: &CoincidenceRecord) -> Result<f64> {
    let total = rec.c_plus + rec.c_minus;
    if total == 0 {
        return Err(Error::UndefinedReadout);
    }
    Ok(100.0 * rec.c_plus as f64 / total as f64)
}

/// Port imbalance `(c_plus - c_minus) / (c_plus + c_minus)` in [-1, 1].
pub fn visibility(rec: &CoincidenceRecord) -> Result<f64> {
    let total = rec.c_plus + rec.c_minus;
    if total == 0 {
        return Err(Error::UndefinedReadout);
    }
    Ok((rec.c_plus as f64 - rec.c_minus as f64) / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{gaussian_beam, plane_wave};
    use crate::grid::Grid;
    use approx::assert_relative_eq;

    #[test]
    fn bucket_detectors_are_rejected() {
        let grid = Grid::square(64, 10e-6).unwrap();
        let field = plane_wave(grid, 2.5).unwrap();
        assert!(point_rate(&field, &DetectorSpec::Bucket).is_err());
    }

    #[test]
    fn zero_field_collects_nothing() {
        let grid = Grid::square(64, 10e-6).unwrap();
        let field = crate::field::ScalarField::zeros(grid);
        let det = DetectorSpec::Point { position: (0.0, 0.0), pinhole_radius: 100e-6 };
        assert_eq!(point_rate(&field, &det).unwrap(), 0.0);
    }

    #[test]
    fn centered_pinhole_on_gaussian_matches_closed_form() {
        let grid = Grid::square(1024, 5e-6).unwrap();
        let sigma = 200e-6;
        let field = gaussian_beam(grid, 1.0, (0.0, 0.0), sigma).unwrap();
        for r in [150e-6, 300e-6, 600e-6] {
            let det = DetectorSpec::Point { position: (0.0, 0.0), pinhole_radius: r };
            let rate = point_rate(&field, &det).unwrap();
            let expected = 1.0 - (-r * r / (2.0 * sigma * sigma)).exp();
            assert!(
                (rate - expected).abs() / expected < 0.01,
                "r = {r}: rate {rate} vs {expected}"
            );
        }
    }

    #[test]
    fn tiny_pinhole_matches_quadrature_oracle() {
        // Pinhole of radius sigma/10, sampled finely enough that the
        // sample-sum approximation sits well inside 0.5% of the disc
        // integral 1 - exp(-r^2 / (2 sigma^2)).
        let grid = Grid::square(2048, 0.2e-6).unwrap();
        let sigma = 40e-6;
        let field = gaussian_beam(grid, 1.0, (0.0, 0.0), sigma).unwrap();
        let r = sigma / 10.0;
        let det = DetectorSpec::Point { position: (0.0, 0.0), pinhole_radius: r };
        let rate = point_rate(&field, &det).unwrap();
        let expected = 1.0 - (-r * r / (2.0 * sigma * sigma)).exp();
        assert!((rate - expected).abs() / expected < 0.005, "rate {rate} vs {expected}");
    }

    #[test]
    fn pinhole_on_plane_wave_scales_with_disc_area() {
        let grid = Grid::square(256, 10e-6).unwrap();
        let field = plane_wave(grid, 1.0).unwrap();
        let r = 500e-6;
        let det = DetectorSpec::Point { position: (0.0, 0.0), pinhole_radius: r };
        let rate = point_rate(&field, &det).unwrap();
        let span = 256.0 * 10e-6;
        let expected = std::f64::consts::PI * r * r / (span * span);
        assert!((rate - expected).abs() / expected < 0.05, "rate {rate} vs {expected}");
    }

    #[test]
    fn disc_clipped_by_the_edge_still_integrates() {
        let grid = Grid::square(64, 10e-6).unwrap();
        let field = plane_wave(grid, 1.0).unwrap();
        let edge = grid.x_axis().max_coord();
        let det = DetectorSpec::Point { position: (edge + 50e-6, 0.0), pinhole_radius: 100e-6 };
        let rate = point_rate(&field, &det).unwrap();
        assert!(rate > 0.0);

        let miss = DetectorSpec::Point { position: (edge + 500e-6, 0.0), pinhole_radius: 100e-6 };
        assert!(point_rate(&field, &miss).is_err());
    }

    #[test]
    fn counts_are_reproducible_and_stream_separated() {
        let a = sample_counts(0.3, 0.2, 1e6, 7).unwrap();
        let b = sample_counts(0.3, 0.2, 1e6, 7).unwrap();
        assert_eq!(a, b);
        let c = sample_counts(0.3, 0.2, 1e6, 8).unwrap();
        assert_ne!(a, c);

        // Same marginal rate on both ports must not produce mirrored draws.
        let d = sample_counts(0.25, 0.25, 1e6, 7).unwrap();
        assert_ne!(d.c_plus, d.c_minus);
    }

    #[test]
    fn counts_concentrate_at_the_normalized_means() {
        // Rates 0.3 and 0.2 split the expected total 60/40.
        let shots = 1e6;
        let rec = sample_counts(0.3, 0.2, shots, 42).unwrap();
        let sig_plus = (0.6 * shots).sqrt();
        let sig_minus = (0.4 * shots).sqrt();
        assert!((rec.c_plus as f64 - 600_000.0).abs() < 5.0 * sig_plus);
        assert!((rec.c_minus as f64 - 400_000.0).abs() < 5.0 * sig_minus);
    }

    #[test]
    fn balanced_rates_give_percentages_near_fifty() {
        let shots: f64 = 1e6;
        let bound = 3.0 * 50.0 / (shots * 0.5).sqrt();
        for seed in [1u64, 2, 3, 4, 5] {
            let rec = sample_counts(0.2, 0.2, shots, seed).unwrap();
            let pct = c_plus_percent(&rec).unwrap();
            assert!((pct - 50.0).abs() < bound, "seed {seed}: {pct}");
        }
    }

    #[test]
    fn degenerate_count_requests_error() {
        assert!(matches!(sample_counts(0.0, 0.0, 100.0, 1), Err(Error::UndefinedReadout)));
        assert!(sample_counts(-0.1, 0.2, 100.0, 1).is_err());
        assert!(sample_counts(0.1, 0.2, -5.0, 1).is_err());
        let rec = sample_counts(0.4, 0.1, 0.0, 1).unwrap();
        assert_eq!(rec, CoincidenceRecord { c_plus: 0, c_minus: 0 });
        let one_sided = sample_counts(1.0, 0.0, 1000.0, 9).unwrap();
        assert_eq!(one_sided.c_minus, 0);
        assert!(one_sided.c_plus > 0);
    }

    #[test]
    fn readout_ratios() {
        let rec = CoincidenceRecord { c_plus: 30, c_minus: 70 };
        assert_relative_eq!(c_plus_percent(&rec).unwrap(), 30.0, epsilon = 1e-12);
        assert_relative_eq!(visibility(&rec).unwrap(), -0.4, epsilon = 1e-12);
        let v = visibility(&rec).unwrap();
        let pct = c_plus_percent(&rec).unwrap();
        assert_relative_eq!(v, 2.0 * pct / 100.0 - 1.0, epsilon = 1e-12);

        let empty = CoincidenceRecord { c_plus: 0, c_minus: 0 };
        assert!(matches!(c_plus_percent(&empty), Err(Error::UndefinedReadout)));
        assert!(matches!(visibility(&empty), Err(Error::UndefinedReadout)));
    }
}
