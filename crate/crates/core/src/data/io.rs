//! `ZSF1` / `ZSC1` matrix files.
//!
//! Layout (little-endian): 4-byte ASCII magic, `u32` rows, `u32` cols, then
//! `rows × cols` IEEE-754 `f32` values in row-major order. Nothing follows the
//! payload. Values are promoted to `f64` on read.

use std::fs;
use std::path::Path;

use super::DataError;
use crate::numerics::Matrix;

pub const FEATURE_MAGIC: [u8; 4] = *b"ZSF1";
pub const CLASS_EMBEDDING_MAGIC: [u8; 4] = *b"ZSC1";

const HEADER_LEN: usize = 12;
/// Upper bound on entries per file (8 GiB of payload).
pub const MAX_ENTRIES: u64 = 1 << 31;

pub fn encode_matrix(magic: [u8; 4], m: &Matrix) -> Result<Vec<u8>, DataError> {
    let rows = u32::try_from(m.rows()).map_err(|_| DataError::DimensionOverflow { rows: m.rows() as u64, cols: m.cols() as u64 })?;
    let cols = u32::try_from(m.cols()).map_err(|_| DataError::DimensionOverflow { rows: m.rows() as u64, cols: m.cols() as u64 })?;
    if u64::from(rows) * u64::from(cols) > MAX_ENTRIES {
        return Err(DataError::DimensionOverflow { rows: rows.into(), cols: cols.into() });
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * m.values().len());
    out.extend_from_slice(&magic);
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    for (i, &v) in m.values().iter().enumerate() {
        let f = v as f32;
        if !f.is_finite() {
            return Err(DataError::NonFinite { index: i });
        }
        out.extend_from_slice(&f.to_le_bytes());
    }
    Ok(out)
}

/// Reads `(rows, cols)` from a header without touching the payload.
pub fn decode_header(magic: [u8; 4], bytes: &[u8]) -> Result<(usize, usize), DataError> {
    if bytes.len() < 4 || bytes[..4] != magic {
        let found = bytes.get(..4).map(|b| String::from_utf8_lossy(b).into_owned()).unwrap_or_default();
        return Err(DataError::BadMagic { expected: String::from_utf8_lossy(&magic).into_owned(), found });
    }
    if bytes.len() < HEADER_LEN {
        return Err(DataError::Truncated { expected: HEADER_LEN as u64, found: bytes.len() as u64 });
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    let cols = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    let entries = u64::from(rows) * u64::from(cols);
    if entries > MAX_ENTRIES {
        return Err(DataError::DimensionOverflow { rows: rows.into(), cols: cols.into() });
    }
    Ok((rows as usize, cols as usize))
}

pub fn decode_matrix(magic: [u8; 4], bytes: &[u8]) -> Result<Matrix, DataError> {
    let (rows, cols) = decode_header(magic, bytes)?;
    let expected = (HEADER_LEN + 4 * rows * cols) as u64;
    let found = bytes.len() as u64;
    if found < expected {
        return Err(DataError::Truncated { expected, found });
    }
    if found > expected {
        return Err(DataError::TrailingBytes { expected, found });
    }
    let values: Vec<f64> =
        bytes[HEADER_LEN..].chunks_exact(4).map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes")))).collect();
    Matrix::new(rows, cols, values).map_err(|e| match e {
        crate::numerics::NumericsError::NonFinite { index } => DataError::NonFinite { index },
        other => DataError::Numerics(other),
    })
}

fn read_file(path: &Path) -> Result<Vec<u8>, DataError> {
    fs::read(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), DataError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| DataError::Io { path: parent.to_path_buf(), source })?;
    }
    fs::write(path, bytes).map_err(|source| DataError::Io { path: path.to_path_buf(), source })
}

pub fn read_feature_file(path: impl AsRef<Path>) -> Result<Matrix, DataError> {
    decode_matrix(FEATURE_MAGIC, &read_file(path.as_ref())?)
}

pub fn write_feature_file(path: impl AsRef<Path>, m: &Matrix) -> Result<(), DataError> {
    write_file(path.as_ref(), &encode_matrix(FEATURE_MAGIC, m)?)
}

pub fn read_class_embedding_file(path: impl AsRef<Path>) -> Result<Matrix, DataError> {
    decode_matrix(CLASS_EMBEDDING_MAGIC, &read_file(path.as_ref())?)
}

pub fn write_class_embedding_file(path: impl AsRef<Path>, m: &Matrix) -> Result<(), DataError> {
    write_file(path.as_ref(), &encode_matrix(CLASS_EMBEDDING_MAGIC, m)?)
}

/// Header-only read, used by validation to check dims without loading payloads.
pub fn read_header(magic: [u8; 4], path: &Path) -> Result<(usize, usize), DataError> {
    use std::io::Read;
    let mut f = fs::File::open(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
    let mut buf = Vec::with_capacity(HEADER_LEN);
    f.by_ref().take(HEADER_LEN as u64).read_to_end(&mut buf).map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
    let dims = decode_header(magic, &buf)?;
    let len = f.metadata().map_err(|source| DataError::Io { path: path.to_path_buf(), source })?.len();
    let expected = (HEADER_LEN + 4 * dims.0 * dims.1) as u64;
    if len < expected {
        return Err(DataError::Truncated { expected, found: len });
    }
    if len > expected {
        return Err(DataError::TrailingBytes { expected, found: len });
    }
    Ok(dims)
}
