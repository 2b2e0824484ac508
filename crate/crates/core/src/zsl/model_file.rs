//! `ZSM1` model files.
//!
//! Little-endian layout:
//!
//! ```text
//! "ZSM1"            magic
//! u32               format version (1)
//! u8 ×5             model kind, encoder kind, readout, initial state, normalize θ
//! u8, u8 × count    stream count, stream tags (0 = body, 1 = hand)
//! u32, u32          feature width d, hidden size (0 = default)
//! u32, u32          W rows, W cols
//! f64 × rows·cols   W, row-major
//! u64, f64 × count  encoder parameter count, flattened parameters
//! ```

use std::path::Path;

use super::{CompatibilityModel, ModelKind, ZslError};
use crate::data::Stream;
use crate::encoders::{Encoder, EncoderConfig, EncoderKind, InitialState, Readout};
use crate::numerics::Matrix;

pub const MODEL_MAGIC: &[u8; 4] = b"ZSM1";
const VERSION: u32 = 1;

fn tag<T: PartialEq + Copy>(all: &[T], v: T) -> u8 {
    all.iter().position(|x| *x == v).expect("tag table is complete") as u8
}

fn untag<T: Copy>(all: &[T], t: u8, what: &str) -> Result<T, ZslError> {
    all.get(t as usize).copied().ok_or_else(|| ZslError::ModelFile(format!("unknown {what} tag {t}")))
}

const READOUTS: [Readout; 2] = [Readout::Final, Readout::Mean];
const INITIAL_STATES: [InitialState; 2] = [InitialState::AveragePool, InitialState::Zero];

fn u32_of(n: usize, what: &str) -> Result<u32, ZslError> {
    u32::try_from(n).map_err(|_| ZslError::ModelFile(format!("{what} {n} does not fit in u32")))
}

pub fn encode_model(model: &CompatibilityModel) -> Result<Vec<u8>, ZslError> {
    let cfg = model.encoder.config();
    let params = model.encoder.params().to_flat();
    let mut out = Vec::with_capacity(64 + 8 * (model.w.values().len() + params.len()));
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(tag(&ModelKind::ALL, model.kind));
    out.push(tag(&EncoderKind::ALL, cfg.kind));
    out.push(tag(&READOUTS, cfg.readout));
    out.push(tag(&INITIAL_STATES, cfg.initial_state));
    out.push(model.normalize_theta as u8);
    out.push(cfg.streams.len() as u8);
    out.extend(cfg.streams.iter().map(|s| tag(&Stream::ALL, *s)));
    out.extend_from_slice(&u32_of(model.encoder.feature_dim(), "feature width")?.to_le_bytes());
    out.extend_from_slice(&u32_of(cfg.hidden.unwrap_or(0), "hidden size")?.to_le_bytes());
    out.extend_from_slice(&u32_of(model.w.rows(), "W rows")?.to_le_bytes());
    out.extend_from_slice(&u32_of(model.w.cols(), "W cols")?.to_le_bytes());
    for v in model.w.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for v in &params {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ZslError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            ZslError::ModelFile(format!("truncated: needed {n} bytes at offset {}, {} available", self.pos, self.bytes.len() - self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, ZslError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, ZslError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, ZslError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, ZslError> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| ZslError::ModelFile("length overflow".into()))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<CompatibilityModel, ZslError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MODEL_MAGIC {
        return Err(ZslError::ModelFile("bad magic (expected ZSM1)".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(ZslError::ModelFile(format!("unsupported version {version}")));
    }
    let kind = untag(&ModelKind::ALL, r.u8()?, "model kind")?;
    let encoder_kind = untag(&EncoderKind::ALL, r.u8()?, "encoder kind")?;
    let readout = untag(&READOUTS, r.u8()?, "readout")?;
    let initial_state = untag(&INITIAL_STATES, r.u8()?, "initial state")?;
    let normalize_theta = match r.u8()? {
        0 => false,
        1 => true,
        t => return Err(ZslError::ModelFile(format!("bad flag byte {t}"))),
    };
    let n_streams = r.u8()?;
    let streams = (0..n_streams).map(|_| untag(&Stream::ALL, r.u8()?, "stream")).collect::<Result<Vec<_>, _>>()?;
    let feature_dim = r.u32()? as usize;
    let hidden = match r.u32()? {
        0 => None,
        h => Some(h as usize),
    };
    let (rows, cols) = (r.u32()? as usize, r.u32()? as usize);
    let w_values = r.f64s(rows.checked_mul(cols).ok_or_else(|| ZslError::ModelFile("W size overflow".into()))?)?;
    let w = Matrix::new(rows, cols, w_values)?;
    let n_params = usize::try_from(r.u64()?).map_err(|_| ZslError::ModelFile("parameter count overflow".into()))?;
    let config = EncoderConfig { kind: encoder_kind, hidden, streams, readout, initial_state };
    let mut encoder = Encoder::new(config, feature_dim, 0)?;
    if encoder.params().num_params() != n_params {
        return Err(ZslError::ModelFile(format!("expected {} encoder parameters, file has {n_params}", encoder.params().num_params())));
    }
    let flat = r.f64s(n_params)?;
    if flat.iter().any(|v| !v.is_finite()) {
        return Err(ZslError::ModelFile("non-finite encoder parameter".into()));
    }
    if r.pos != bytes.len() {
        return Err(ZslError::ModelFile(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    encoder.params_mut().set_flat(&flat);
    CompatibilityModel::new(kind, w, encoder, normalize_theta)
}

pub fn write_model(model: &CompatibilityModel, path: &Path) -> Result<(), ZslError> {
    let io = |source| ZslError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, encode_model(model)?).map_err(io)
}

pub fn read_model(path: &Path) -> Result<CompatibilityModel, ZslError> {
    let bytes = std::fs::read(path).map_err(|source| ZslError::Io { path: path.to_path_buf(), source })?;
    decode_model(&bytes)
}
