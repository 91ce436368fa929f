//! Binary tensor files and PGM previews.
//!
//! Tensor layout: the 8-byte magic `PKTENS01`, a little-endian `u32` rank,
//! `rank` little-endian `u32` dimensions, then the `f32` payload in
//! row-major order, little-endian. Images are stored as rank 2
//! `[height, width]`, volumes as rank 3 `[nz, ny, nx]`.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::CoreError;
use crate::types::{LayerImage, Modality};

pub const MAGIC: &[u8; 8] = b"PKTENS01";

#[derive(Debug, Clone, PartialEq)]
pub struct RawTensor {
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl RawTensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self, CoreError> {
        let expected: usize = dims.iter().product();
        if expected != data.len() {
            return Err(CoreError::Format(format!(
                "dims {dims:?} imply {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }
}

pub fn encode_tensor(dims: &[usize], data: &[f32]) -> Result<Vec<u8>, CoreError> {
    let expected: usize = dims.iter().product();
    if expected != data.len() {
        return Err(CoreError::Format(format!(
            "dims {dims:?} imply {expected} values, got {}",
            data.len()
        )));
    }
    let mut out = Vec::with_capacity(12 + 4 * dims.len() + 4 * data.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for &d in dims {
        let d = u32::try_from(d).map_err(|_| CoreError::Format(format!("dimension {d} exceeds u32")))?;
        out.extend_from_slice(&d.to_le_bytes());
    }
    for &v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_tensor(bytes: &[u8]) -> Result<RawTensor, CoreError> {
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err(CoreError::Format("missing PKTENS01 magic".into()));
    }
    let read_u32 = |at: usize| -> Result<u32, CoreError> {
        bytes
            .get(at..at + 4)
            .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .ok_or_else(|| CoreError::Format("truncated header".into()))
    };
    let rank = read_u32(8)? as usize;
    let mut dims = Vec::with_capacity(rank);
    for i in 0..rank {
        dims.push(read_u32(12 + 4 * i)? as usize);
    }
    let header = 12 + 4 * rank;
    let count: usize = dims.iter().product();
    let payload = &bytes[header..];
    if payload.len() != 4 * count {
        return Err(CoreError::Format(format!(
            "payload has {} bytes, dims {dims:?} need {}",
            payload.len(),
            4 * count
        )));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(RawTensor { dims, data })
}

pub fn write_tensor(path: &Path, dims: &[usize], data: &[f32]) -> Result<(), CoreError> {
    let bytes = encode_tensor(dims, data)?;
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CoreError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CoreError::io(path, e))
}

pub fn read_tensor(path: &Path) -> Result<RawTensor, CoreError> {
    let bytes = fs::read(path).map_err(|e| CoreError::io(path, e))?;
    decode_tensor(&bytes)
}

pub fn write_image(path: &Path, image: &LayerImage) -> Result<(), CoreError> {
    write_tensor(path, &[image.height(), image.width()], image.data())
}

pub fn read_image(path: &Path, modality: Modality) -> Result<LayerImage, CoreError> {
    let t = read_tensor(path)?;
    if t.dims.len() != 2 {
        return Err(CoreError::Format(format!(
            "{}: expected rank 2 image, got rank {}",
            path.display(),
            t.dims.len()
        )));
    }
    LayerImage::new(modality, t.dims[1], t.dims[0], t.data)
}

/// 8-bit binary PGM (P5). Values are clamped to `[0, 1]` and scaled to
/// `0..=255` with rounding.
pub fn encode_pgm(image: &LayerImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(image.data().len() + 32);
    write!(out, "P5\n{} {}\n255\n", image.width(), image.height()).expect("write to Vec");
    out.extend(image.data().iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    out
}

pub fn write_pgm(path: &Path, image: &LayerImage) -> Result<(), CoreError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CoreError::io(dir, e))?;
    }
    fs::write(path, encode_pgm(image)).map_err(|e| CoreError::io(path, e))
}
