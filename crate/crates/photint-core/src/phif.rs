//! PHIF1: a small self-describing binary container for complex fields.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic   5 bytes   "PHIF1"
//! n_x     u64       samples along the first (fastest) dimension
//! n_y     u64       samples along the second dimension
//! pitch   f64       meters per sample
//! data    n_x * n_y pairs of f64 (re, im), row-major
//! ```
//!
//! A CSV export (`x,y,re,im`, nine significant digits) is provided for
//! inspection with ordinary tabular tools.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::Grid;
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64 as C64;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 5] = b"PHIF1";

pub(crate) fn write_matrix<W: Write>(
    w: &mut W,
    n_x: usize,
    n_y: usize,
    pitch: f64,
    amps: &[C64],
) -> Result<()> {
    debug_assert_eq!(amps.len(), n_x * n_y);
    w.write_all(MAGIC)?;
    w.write_u64::<LittleEndian>(n_x as u64)?;
    w.write_u64::<LittleEndian>(n_y as u64)?;
    w.write_f64::<LittleEndian>(pitch)?;
    for a in amps {
        w.write_f64::<LittleEndian>(a.re)?;
        w.write_f64::<LittleEndian>(a.im)?;
    }
    Ok(())
}

pub(crate) fn read_matrix<R: Read>(r: &mut R) -> Result<(usize, usize, f64, Vec<C64>)> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {:?}, expected \"PHIF1\"", magic)));
    }
    let n_x = r.read_u64::<LittleEndian>().map_err(truncated)? as usize;
    let n_y = r.read_u64::<LittleEndian>().map_err(truncated)? as usize;
    let pitch = r.read_f64::<LittleEndian>().map_err(truncated)?;
    if n_x == 0 || n_y == 0 || n_x.checked_mul(n_y).is_none() {
        return Err(Error::Format(format!("invalid sample counts {n_x} x {n_y}")));
    }
    if !(pitch > 0.0) || !pitch.is_finite() {
        return Err(Error::Format(format!("invalid pitch {pitch}")));
    }
    let mut amps = Vec::with_capacity(n_x * n_y);
    for _ in 0..n_x * n_y {
        let re = r.read_f64::<LittleEndian>().map_err(truncated)?;
        let im = r.read_f64::<LittleEndian>().map_err(truncated)?;
        if !re.is_finite() || !im.is_finite() {
            return Err(Error::Format("non-finite amplitude in data section".into()));
        }
        amps.push(C64::new(re, im));
    }
    let mut probe = [0u8; 1];
    match r.read(&mut probe)? {
        0 => Ok((n_x, n_y, pitch, amps)),
        _ => Err(Error::Format("trailing bytes after data section".into())),
    }
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("file truncated".into())
    } else {
        Error::Io(e)
    }
}

/// Writes a field to `w` in the PHIF1 container format.
pub fn write_field<W: Write>(w: &mut W, field: &ScalarField) -> Result<()> {
    let g = field.grid();
    write_matrix(w, g.n_x(), g.n_y(), g.pitch(), field.amps())
}

/// Reads a field from `r`; the stored sample counts must satisfy the grid
/// rules of this crate (powers of two, at least 2).
pub fn read_field<R: Read>(r: &mut R) -> Result<ScalarField> {
    let (n_x, n_y, pitch, amps) = read_matrix(r)?;
    let grid = Grid::new(n_x, n_y, pitch)?;
    ScalarField::new(grid, amps)
}

/// Saves a field to a file.
pub fn save_field(path: impl AsRef<Path>, field: &ScalarField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_field(&mut w, field)?;
    w.flush()?;
    Ok(())
}

/// Loads a field from a file.
pub fn load_field(path: impl AsRef<Path>) -> Result<ScalarField> {
    let mut r = BufReader::new(File::open(path)?);
    read_field(&mut r)
}

/// Writes a field as `x,y,re,im` CSV rows (nine significant digits).
pub fn write_field_csv<W: Write>(w: &mut W, field: &ScalarField) -> Result<()> {
    let g = field.grid();
    writeln!(w, "x,y,re,im")?;
    for iy in 0..g.n_y() {
        for ix in 0..g.n_x() {
            let a = field.amp(ix, iy);
            writeln!(w, "{:.8e},{:.8e},{:.8e},{:.8e}", g.x(ix), g.y(iy), a.re, a.im)?;
        }
    }
    Ok(())
}
