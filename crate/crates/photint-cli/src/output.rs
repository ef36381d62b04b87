//! CSV writers. All floating-point columns use nine significant digits in
//! scientific notation so reruns of the same configuration produce
//! byte-identical files.

use anyhow::Context;
use photint_core::{ScanRow, SweepRow};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

fn fmt9(x: f64) -> String {
    format!("{x:.8e}")
}

fn create(dir: &Path, name: &str) -> anyhow::Result<(BufWriter<File>, PathBuf)> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok((BufWriter::new(file), path))
}

/// Writes the proportion-sweep table; returns the file path.
pub fn write_sweep_csv(dir: &Path, rows: &[SweepRow]) -> anyhow::Result<PathBuf> {
    let (mut w, path) = create(dir, "sweep.csv")?;
    writeln!(w, "config,p,N,seed,c_plus,c_minus,c_plus_pct")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.config,
            fmt9(r.fraction),
            r.size,
            r.seed,
            fmt9(r.c_plus),
            fmt9(r.c_minus),
            fmt9(r.c_plus_pct)
        )?;
    }
    w.flush()?;
    Ok(path)
}

/// Writes the visibility-scan table with D2 positions in micrometers;
/// returns the file path.
pub fn write_visibility_csv(dir: &Path, rows: &[ScanRow]) -> anyhow::Result<PathBuf> {
    let (mut w, path) = create(dir, "visibility.csv")?;
    writeln!(w, "config,d2_um,c_plus,c_minus,visibility")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.config,
            fmt9(r.d2 * 1e6),
            fmt9(r.c_plus),
            fmt9(r.c_minus),
            fmt9(r.visibility)
        )?;
    }
    w.flush()?;
    Ok(path)
}

/// Writes the single-row integrate table; returns the file path.
pub fn write_integrate_csv(
    dir: &Path,
    t: f64,
    c_plus_pct: f64,
    sigma_x: f64,
) -> anyhow::Result<PathBuf> {
    let (mut w, path) = create(dir, "integrate.csv")?;
    writeln!(w, "t,c_plus_pct,sigma_x")?;
    writeln!(w, "{},{},{}", fmt9(t), fmt9(c_plus_pct), fmt9(sigma_x))?;
    w.flush()?;
    Ok(path)
}
