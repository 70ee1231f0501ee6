//! `.fmx` feature-matrix container.
//!
//! Layout: the magic bytes `FMX1`, a little-endian `u32` row count, a
//! little-endian `u32` column count, then `rows * cols` little-endian `f32`
//! values in row-major order. Clip ids live in a sidecar `<name>.ids` file,
//! one per line, aligned with the rows.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use sociopose_core::Matrix;

use crate::error::{CliError, Result};

pub const MAGIC: &[u8; 4] = b"FMX1";
const HEADER_LEN: usize = 12;

/// Path of the id sidecar for `path`.
pub fn ids_path(path: &Path) -> PathBuf {
    path.with_extension("ids")
}

pub fn encode(m: &Matrix) -> Result<Vec<u8>> {
    let rows = u32::try_from(m.rows()).map_err(|_| CliError::data("matrix has too many rows for fmx"))?;
    let cols = u32::try_from(m.cols()).map_err(|_| CliError::data("matrix has too many columns for fmx"))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * m.as_slice().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    for &v in m.as_slice() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8], origin: &Path) -> Result<Matrix> {
    let bad = |msg: String| CliError::data(format!("{}: {msg}", origin.display()));
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(bad("not an FMX1 file".into()));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| bad(format!("header {rows} x {cols} overflows")))?;
    if bytes.len() != expected {
        return Err(bad(format!("header says {rows} x {cols} ({expected} bytes), file has {} bytes", bytes.len())));
    }
    let data: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(bad(format!("non-finite value at row {}, column {}", i / cols.max(1), i % cols.max(1))));
    }
    Matrix::from_vec(rows, cols, data).map_err(CliError::from)
}

/// Writes the matrix and its id sidecar.
pub fn write(path: &Path, m: &Matrix, ids: &[String]) -> Result<()> {
    if ids.len() != m.rows() {
        return Err(CliError::data(format!("{}: {} ids for {} rows", path.display(), ids.len(), m.rows())));
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, encode(m)?).map_err(|e| CliError::io(path, e))?;
    let ids_file = ids_path(path);
    let f = fs::File::create(&ids_file).map_err(|e| CliError::io(&ids_file, e))?;
    let mut w = BufWriter::new(f);
    for id in ids {
        writeln!(w, "{id}").map_err(|e| CliError::io(&ids_file, e))?;
    }
    w.flush().map_err(|e| CliError::io(&ids_file, e))
}

/// Reads a matrix and its ids; fails if the sidecar is missing or
/// misaligned.
pub fn read(path: &Path) -> Result<(Matrix, Vec<String>)> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let m = decode(&bytes, path)?;
    let ids_file = ids_path(path);
    let text = fs::read_to_string(&ids_file).map_err(|e| CliError::io(&ids_file, e))?;
    let ids: Vec<String> = text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
    if ids.len() != m.rows() {
        return Err(CliError::data(format!("{}: {} ids for {} rows", ids_file.display(), ids.len(), m.rows())));
    }
    Ok((m, ids))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let m = Matrix::from_rows(&[[1.0, -2.5, 0.0], [3.0, 4.0, 0.125]]).unwrap();
        let b = encode(&m).unwrap();
        assert_eq!(&b[..4], b"FMX1");
        assert_eq!(&b[4..12], &[2, 0, 0, 0, 3, 0, 0, 0]);
        assert_eq!(&b[12..16], &1.0f32.to_le_bytes());
        assert_eq!(b.len(), 12 + 24);
        assert_eq!(decode(&b, Path::new("m")).unwrap(), m);
    }

    #[test]
    fn rejects_bad_input() {
        let m = Matrix::zeros(2, 2);
        let mut b = encode(&m).unwrap();
        assert!(decode(&b[..b.len() - 1], Path::new("m")).is_err());
        b[0] = b'X';
        assert!(decode(&b, Path::new("m")).is_err());
        let mut nan = encode(&m).unwrap();
        nan[12..16].copy_from_slice(&f32::NAN.to_le_bytes());
        assert_eq!(decode(&nan, Path::new("m")).unwrap_err().exit_code(), 3);
    }
}
