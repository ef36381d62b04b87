//! SLM phase masks: construction, phase encoding of real-valued samples,
//! the mapping from physical coordinates onto mask cells, and file formats.
//!
//! A mask is a `rows x cols` matrix of phases, each cell a square block of
//! `cell_pixels x cell_pixels` physical SLM pixels. Masks are placed centered
//! on the optical axis. Grid samples are mapped onto cells by nearest-cell
//! lookup with half-open cell intervals, so binary masks stay binary; a
//! sample landing within rounding of a cell edge belongs to the upper cell,
//! and sub-pixel misalignment between cells and field samples contributes at
//! most a one-sample edge error.

use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Physical pixel pitch used when nothing else is configured, in meters.
pub const DEFAULT_PIXEL_PITCH: f64 = 8.0e-6;

const TWO_PI: f64 = 2.0 * PI;

/// A phase mask with physical cell geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMask {
    rows: usize,
    cols: usize,
    phases: Vec<f64>,
    cell_pixels: usize,
    pixel_pitch: f64,
}

impl PhaseMask {
    /// Builds a mask from row-major phases (`phases[i*cols + j]`).
    ///
    /// Every phase must be finite and in `[0, 2*pi)`.
    pub fn new(
        rows: usize,
        cols: usize,
        phases: Vec<f64>,
        cell_pixels: usize,
        pixel_pitch: f64,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::domain("mask needs at least one row and one column"));
        }
        if phases.len() != rows * cols {
            return Err(Error::domain(format!(
                "phase buffer holds {} cells, mask needs {}",
                phases.len(),
                rows * cols
            )));
        }
        if cell_pixels == 0 {
            return Err(Error::domain("cell size must be at least one pixel"));
        }
        if !(pixel_pitch > 0.0) || !pixel_pitch.is_finite() {
            return Err(Error::domain(format!("pixel pitch must be positive, got {pixel_pitch}")));
        }
        for (k, &p) in phases.iter().enumerate() {
            if !p.is_finite() || !(0.0..TWO_PI).contains(&p) {
                return Err(Error::domain(format!(
                    "phase {} at cell ({}, {}) outside [0, 2*pi)",
                    p,
                    k / cols,
                    k % cols
                )));
            }
        }
        Ok(PhaseMask { rows, cols, phases, cell_pixels, pixel_pitch })
    }

    /// Cell rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Cell columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// SLM pixels per cell edge.
    pub fn cell_pixels(&self) -> usize {
        self.cell_pixels
    }

    /// Physical pixel pitch in meters.
    pub fn pixel_pitch(&self) -> f64 {
        self.pixel_pitch
    }

    /// Phase of cell `(row, col)` in radians.
    pub fn phase(&self, row: usize, col: usize) -> f64 {
        self.phases[row * self.cols + col]
    }

    /// Row-major phases.
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Physical edge length of one cell in meters.
    pub fn cell_size(&self) -> f64 {
        self.cell_pixels as f64 * self.pixel_pitch
    }

    /// Physical width (x extent) of the mask in meters.
    pub fn width(&self) -> f64 {
        self.cols as f64 * self.cell_size()
    }

    /// Physical height (y extent) of the mask in meters.
    pub fn height(&self) -> f64 {
        self.rows as f64 * self.cell_size()
    }

    /// Column index of the cell containing physical coordinate `x`, with the
    /// mask centered on the axis; `None` outside the mask footprint.
    pub fn col_of_x(&self, x: f64) -> Option<usize> {
        cell_lookup(x, self.width(), self.cell_size(), self.cols)
    }

    /// Row index of the cell containing physical coordinate `y`.
    pub fn row_of_y(&self, y: f64) -> Option<usize> {
        cell_lookup(y, self.height(), self.cell_size(), self.rows)
    }

    /// Cell indices `(row, col)` at physical position, if inside the mask.
    pub fn cell_at(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        Some((self.row_of_y(y)?, self.col_of_x(x)?))
    }

    /// Phase applied at physical position: the containing cell's phase, or 0
    /// outside the mask footprint (an idle SLM region does not modulate).
    pub fn phase_at(&self, x: f64, y: f64) -> f64 {
        match self.cell_at(x, y) {
            Some((i, j)) => self.phase(i, j),
            None => 0.0,
        }
    }

    /// Fraction of cells with phase exactly 0 (diagnostic for binary masks).
    pub fn fraction_white(&self) -> f64 {
        let white = self.phases.iter().filter(|&&p| p == 0.0).count();
        white as f64 / self.phases.len() as f64
    }
}

fn cell_lookup(coord: f64, extent: f64, cell: f64, count: usize) -> Option<usize> {
    // Tolerance of 1e-9 cells absorbs rounding in coordinate arithmetic so
    // samples that sit on a cell edge mathematically are binned consistently.
    let u = (coord + 0.5 * extent) / cell + 1e-9;
    if u < 0.0 || u >= count as f64 {
        None
    } else {
        Some(u as usize)
    }
}

/// Recipe for a binary (0 / pi) mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryMaskSpec {
    /// Cell rows.
    pub rows: usize,
    /// Cell columns.
    pub cols: usize,
    /// Target fraction of white (phase 0) cells; the realized count is
    /// exactly `round(fraction_white * rows * cols)`.
    pub fraction_white: f64,
    /// Spatial arrangement of the white cells.
    pub layout: MaskLayout,
}

/// How white cells are arranged in a binary mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaskLayout {
    /// Seeded uniform placement (Fisher-Yates shuffle of the cell indices).
    Random {
        /// Seed for the placement.
        seed: u64,
    },
    /// Horizontal stripes alternating white/black down the rows, starting
    /// white at row 0; each stripe is `period_cells` rows thick.
    Stripes {
        /// Stripe thickness in cell rows.
        period_cells: usize,
    },
}

impl BinaryMaskSpec {
    /// A randomly arranged binary mask recipe.
    pub fn random(rows: usize, cols: usize, fraction_white: f64, seed: u64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::domain("mask needs at least one row and one column"));
        }
        if !(0.0..=1.0).contains(&fraction_white) {
            return Err(Error::domain(format!(
                "fraction of white cells must lie in [0, 1], got {fraction_white}"
            )));
        }
        Ok(BinaryMaskSpec { rows, cols, fraction_white, layout: MaskLayout::Random { seed } })
    }

    /// A striped binary mask recipe; the white fraction is determined by the
    /// stripe pattern itself.
    pub fn stripes(rows: usize, cols: usize, period_cells: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::domain("mask needs at least one row and one column"));
        }
        if period_cells == 0 {
            return Err(Error::domain("stripe period must be at least one cell"));
        }
        let white_rows = (0..rows).filter(|i| (i / period_cells) % 2 == 0).count();
        let fraction_white = white_rows as f64 / rows as f64;
        Ok(BinaryMaskSpec { rows, cols, fraction_white, layout: MaskLayout::Stripes { period_cells } })
    }
}

/// Realizes a binary mask: exactly `round(p * rows * cols)` cells at phase 0,
/// the rest at pi, arranged per the layout.
pub fn make_binary_mask(
    spec: &BinaryMaskSpec,
    cell_pixels: usize,
    pixel_pitch: f64,
) -> Result<PhaseMask> {
    let n = spec.rows * spec.cols;
    let phases = match spec.layout {
        MaskLayout::Random { seed } => {
            let white = (spec.fraction_white * n as f64).round() as usize;
            let mut order: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            order.shuffle(&mut rng);
            let mut phases = vec![PI; n];
            for &k in order.iter().take(white) {
                phases[k] = 0.0;
            }
            phases
        }
        MaskLayout::Stripes { period_cells } => {
            let mut phases = vec![0.0; n];
            for i in 0..spec.rows {
                let phase = if (i / period_cells) % 2 == 0 { 0.0 } else { PI };
                for j in 0..spec.cols {
                    phases[i * spec.cols + j] = phase;
                }
            }
            phases
        }
    };
    PhaseMask::new(spec.rows, spec.cols, phases, cell_pixels, pixel_pitch)
}

/// Encodes samples of a function with values in `[-1, 1]` as the phase mask
/// `phi_ij = acos(g_ij)`, which lands in `[0, pi]`.
pub fn encode_function(
    rows: usize,
    cols: usize,
    g: &[f64],
    cell_pixels: usize,
    pixel_pitch: f64,
) -> Result<PhaseMask> {
    if g.len() != rows * cols {
        return Err(Error::domain(format!(
            "sample buffer holds {} values, mask needs {}",
            g.len(),
            rows * cols
        )));
    }
    let mut phases = Vec::with_capacity(g.len());
    for (k, &v) in g.iter().enumerate() {
        if !v.is_finite() || !(-1.0..=1.0).contains(&v) {
            return Err(Error::domain(format!(
                "sample {} at cell ({}, {}) outside [-1, 1]",
                v,
                k / cols,
                k % cols
            )));
        }
        phases.push(v.acos());
    }
    PhaseMask::new(rows, cols, phases, cell_pixels, pixel_pitch)
}

const P2_MAXVAL: u32 = 65535;

/// Writes a mask as a portable graymap (P2, maxval 65535); gray value is
/// `round(phi / (2*pi) * 65535)`. The cell geometry rides along in a comment
/// so files written here can be read back without extra flags.
pub fn write_p2<W: Write>(w: &mut W, mask: &PhaseMask) -> Result<()> {
    writeln!(w, "P2")?;
    writeln!(
        w,
        "# cell_pixels={} pixel_pitch_um={:.17}",
        mask.cell_pixels,
        mask.pixel_pitch * 1e6
    )?;
    writeln!(w, "{} {}", mask.cols, mask.rows)?;
    writeln!(w, "{P2_MAXVAL}")?;
    for i in 0..mask.rows {
        let row: Vec<String> = (0..mask.cols)
            .map(|j| ((mask.phase(i, j) / TWO_PI * P2_MAXVAL as f64).round() as u32).to_string())
            .collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Reads a P2 mask written by [`write_p2`], taking the cell geometry from
/// the embedded comment.
pub fn read_p2<R: Read>(r: R) -> Result<PhaseMask> {
    let (rows, cols, phases, geometry) = parse_p2(r)?;
    let (cell_pixels, pixel_pitch) = geometry.ok_or_else(|| {
        Error::Format(
            "no cell geometry comment in P2 file; supply cell size and pixel pitch explicitly"
                .into(),
        )
    })?;
    PhaseMask::new(rows, cols, phases, cell_pixels, pixel_pitch)
}

/// Reads a P2 mask with explicitly supplied cell geometry (for files written
/// by other tools), ignoring any embedded geometry comment.
pub fn read_p2_with<R: Read>(r: R, cell_pixels: usize, pixel_pitch: f64) -> Result<PhaseMask> {
    let (rows, cols, phases, _) = parse_p2(r)?;
    PhaseMask::new(rows, cols, phases, cell_pixels, pixel_pitch)
}

#[allow(clippy::type_complexity)]
fn parse_p2<R: Read>(r: R) -> Result<(usize, usize, Vec<f64>, Option<(usize, f64)>)> {
    let reader = BufReader::new(r);
    let mut geometry = None;
    let mut tokens: Vec<String> = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if let Some(comment) = line.trim_start().strip_prefix('#') {
            if geometry.is_none() {
                geometry = parse_geometry_comment(comment);
            }
            continue;
        }
        tokens.extend(line.split_whitespace().map(str::to_owned));
    }
    if tokens.first().map(String::as_str) != Some("P2") {
        return Err(Error::Format("not a P2 graymap (missing magic)".into()));
    }
    if tokens.len() < 4 {
        return Err(Error::Format("P2 header truncated".into()));
    }
    let cols: usize = tokens[1].parse().map_err(|_| bad_token(&tokens[1]))?;
    let rows: usize = tokens[2].parse().map_err(|_| bad_token(&tokens[2]))?;
    let maxval: u32 = tokens[3].parse().map_err(|_| bad_token(&tokens[3]))?;
    if maxval != P2_MAXVAL {
        return Err(Error::Format(format!("expected maxval {P2_MAXVAL}, got {maxval}")));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::Format(format!("invalid mask dimensions {cols} x {rows}")));
    }
    let data = &tokens[4..];
    if data.len() != rows * cols {
        return Err(Error::Format(format!(
            "expected {} gray values, found {}",
            rows * cols,
            data.len()
        )));
    }
    let mut phases = Vec::with_capacity(rows * cols);
    for t in data {
        let v: u32 = t.parse().map_err(|_| bad_token(t))?;
        if v > P2_MAXVAL {
            return Err(Error::Format(format!("gray value {v} exceeds maxval {P2_MAXVAL}")));
        }
        // Gray 65535 encodes a phase within half a quantum of 2*pi, which is
        // the same physical phase as 0.
        let phi = if v == P2_MAXVAL { 0.0 } else { v as f64 * TWO_PI / P2_MAXVAL as f64 };
        phases.push(phi);
    }
    Ok((rows, cols, phases, geometry))
}

fn parse_geometry_comment(comment: &str) -> Option<(usize, f64)> {
    let mut cell_pixels = None;
    let mut pitch_um = None;
    for part in comment.split_whitespace() {
        if let Some(v) = part.strip_prefix("cell_pixels=") {
            cell_pixels = v.parse::<usize>().ok();
        } else if let Some(v) = part.strip_prefix("pixel_pitch_um=") {
            pitch_um = v.parse::<f64>().ok();
        }
    }
    Some((cell_pixels?, pitch_um? * 1e-6))
}

fn bad_token(t: &str) -> Error {
    Error::Format(format!("unparseable token {t:?} in P2 file"))
}

/// Saves a mask to a P2 file.
pub fn save_p2(path: impl AsRef<Path>, mask: &PhaseMask) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_p2(&mut w, mask)?;
    w.flush()?;
    Ok(())
}

/// Loads a mask from a P2 file written by this crate.
pub fn load_p2(path: impl AsRef<Path>) -> Result<PhaseMask> {
    read_p2(BufReader::new(File::open(path)?))
}

/// Writes a mask as `i,j,phi` CSV rows (nine significant digits).
pub fn write_mask_csv<W: Write>(w: &mut W, mask: &PhaseMask) -> Result<()> {
    writeln!(w, "i,j,phi")?;
    for i in 0..mask.rows() {
        for j in 0..mask.cols() {
            writeln!(w, "{},{},{:.8e}", i, j, mask.phase(i, j))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_mask_has_exact_counts() {
        let spec = BinaryMaskSpec::random(2, 2, 0.5, 99).unwrap();
        let mask = make_binary_mask(&spec, 1, DEFAULT_PIXEL_PITCH).unwrap();
        let whites = mask.phases().iter().filter(|&&p| p == 0.0).count();
        let blacks = mask.phases().iter().filter(|&&p| p == PI).count();
        assert_eq!((whites, blacks), (2, 2));
    }

    #[test]
    fn random_mask_is_reproducible() {
        let spec = BinaryMaskSpec::random(10, 10, 0.3, 42).unwrap();
        let a = make_binary_mask(&spec, 4, DEFAULT_PIXEL_PITCH).unwrap();
        let b = make_binary_mask(&spec, 4, DEFAULT_PIXEL_PITCH).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.phases().iter().filter(|&&p| p == 0.0).count(), 30);

        let other = make_binary_mask(
            &BinaryMaskSpec::random(10, 10, 0.3, 43).unwrap(),
            4,
            DEFAULT_PIXEL_PITCH,
        )
        .unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn stripes_alternate_starting_white() {
        let spec = BinaryMaskSpec::stripes(8, 3, 1).unwrap();
        let mask = make_binary_mask(&spec, 70, DEFAULT_PIXEL_PITCH).unwrap();
        for i in 0..8 {
            let expect = if i % 2 == 0 { 0.0 } else { PI };
            for j in 0..3 {
                assert_eq!(mask.phase(i, j), expect, "row {i}");
            }
        }
        assert_eq!(spec.fraction_white, 0.5);

        let thick = BinaryMaskSpec::stripes(8, 1, 2).unwrap();
        let mask = make_binary_mask(&thick, 1, DEFAULT_PIXEL_PITCH).unwrap();
        let expect = [0.0, 0.0, PI, PI, 0.0, 0.0, PI, PI];
        for (i, e) in expect.iter().enumerate() {
            assert_eq!(mask.phase(i, 0), *e);
        }
    }

    #[test]
    fn encode_function_endpoints() {
        let ones = encode_function(2, 2, &[1.0; 4], 1, DEFAULT_PIXEL_PITCH).unwrap();
        assert!(ones.phases().iter().all(|&p| p == 0.0));

        let zeros = encode_function(2, 2, &[0.0; 4], 1, DEFAULT_PIXEL_PITCH).unwrap();
        assert!(zeros.phases().iter().all(|&p| (p - PI / 2.0).abs() < 1e-15));

        let negs = encode_function(2, 2, &[-1.0; 4], 1, DEFAULT_PIXEL_PITCH).unwrap();
        assert!(negs.phases().iter().all(|&p| (p - PI).abs() < 1e-15));
    }

    #[test]
    fn encode_function_names_offending_cell() {
        let g = [0.0, 0.0, 0.0, 0.0, 0.0, 1.5];
        match encode_function(2, 3, &g, 1, DEFAULT_PIXEL_PITCH) {
            Err(Error::Domain(msg)) => {
                assert!(msg.contains("(1, 2)"), "message was: {msg}");
                assert!(msg.contains("1.5"));
            }
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn cell_lookup_covers_footprint() {
        // 2x2 cells of 2 px at 1 m pitch: footprint [-2, 2) x [-2, 2).
        let mask = PhaseMask::new(2, 2, vec![0.0, 1.0, 2.0, 3.0], 2, 1.0).unwrap();
        assert_eq!(mask.cell_at(-2.0, -2.0), Some((0, 0)));
        assert_eq!(mask.cell_at(-0.5, -2.0), Some((0, 0)));
        assert_eq!(mask.cell_at(0.0, -2.0), Some((0, 1)));
        assert_eq!(mask.cell_at(1.99, 1.99), Some((1, 1)));
        assert_eq!(mask.cell_at(2.0, 0.0), None);
        assert_eq!(mask.cell_at(0.0, -2.01), None);
        assert_eq!(mask.phase_at(5.0, 5.0), 0.0);
        assert_eq!(mask.phase_at(0.5, 0.5), 3.0);
    }

    #[test]
    fn p2_round_trip_preserves_phases_to_quantization() {
        let spec = BinaryMaskSpec::random(6, 5, 0.4, 7).unwrap();
        let mask = make_binary_mask(&spec, 16, 8.0e-6).unwrap();
        let mut buf = Vec::new();
        write_p2(&mut buf, &mask).unwrap();
        let back = read_p2(buf.as_slice()).unwrap();
        assert_eq!(back.rows(), 6);
        assert_eq!(back.cols(), 5);
        assert_eq!(back.cell_pixels(), 16);
        assert!((back.pixel_pitch() - 8.0e-6).abs() < 1e-18);
        // Half a quantization step each way, with slack for the float rounding
        // in the decode itself.
        let step = 2.0 * PI / P2_MAXVAL as f64;
        for (a, b) in back.phases().iter().zip(mask.phases()) {
            assert!((a - b).abs() <= 0.501 * step, "{a} vs {b}");
        }
    }

    #[test]
    fn p2_near_two_pi_wraps_to_zero() {
        let phi = TWO_PI - 1e-9;
        let mask = PhaseMask::new(1, 1, vec![phi], 1, 1.0).unwrap();
        let mut buf = Vec::new();
        write_p2(&mut buf, &mask).unwrap();
        let back = read_p2(buf.as_slice()).unwrap();
        assert_eq!(back.phase(0, 0), 0.0);
    }

    #[test]
    fn p2_import_validates() {
        assert!(matches!(read_p2("P3\n1 1\n65535\n0\n".as_bytes()), Err(Error::Format(_))));
        assert!(matches!(
            read_p2("P2\n# cell_pixels=1 pixel_pitch_um=8\n1 1\n255\n0\n".as_bytes()),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            read_p2("P2\n# cell_pixels=1 pixel_pitch_um=8\n2 2\n65535\n0 0 0\n".as_bytes()),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            read_p2("P2\n# cell_pixels=1 pixel_pitch_um=8\n1 1\n65535\n70000\n".as_bytes()),
            Err(Error::Format(_))
        ));
        // Geometry comment missing: readable only with explicit geometry.
        let plain = "P2\n1 1\n65535\n32768\n";
        assert!(matches!(read_p2(plain.as_bytes()), Err(Error::Format(_))));
        let mask = read_p2_with(plain.as_bytes(), 4, 8.0e-6).unwrap();
        assert!((mask.phase(0, 0) - PI).abs() < 1e-4);
    }

    #[test]
    fn mask_csv_shape() {
        let mask = PhaseMask::new(2, 2, vec![0.0, 1.0, 2.0, 3.0], 1, 1.0).unwrap();
        let mut buf = Vec::new();
        write_mask_csv(&mut buf, &mask).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "i,j,phi");
        assert_eq!(lines[1], "0,0,0.00000000e0");
        assert_eq!(lines.len(), 5);
    }
}
