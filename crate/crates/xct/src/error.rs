use thiserror::Error;

use crate::crop::Edge;

#[derive(Debug, Error)]
pub enum XctError {
    #[error("volume {nx}x{ny}x{nz} does not match {len} samples")]
    Shape { nx: usize, ny: usize, nz: usize, len: usize },
    #[error("volume is empty")]
    Empty,
    #[error("invalid voxel intensity {value} at index {index}")]
    Intensity { index: usize, value: f32 },
    #[error("invalid parameter `{name}`: {value}")]
    Parameter { name: &'static str, value: f64 },
    #[error("unsupported rotation: {0}")]
    UnsupportedRotation(String),
    #[error("layer thickness {layer_thickness} µm is finer than the voxel size {voxel_size} µm")]
    Resolution { layer_thickness: f64, voxel_size: f64 },
    #[error("degenerate crop frame ({x0}, {y0})-({x1}, {y1})")]
    DegenerateFrame { x0: i64, y0: i64, x1: i64, y1: i64 },
    #[error("crop frame exceeds the {width}x{height} image at the {edge} edge")]
    OutOfBounds { edge: Edge, width: usize, height: usize },
    #[error(transparent)]
    Core(#[from] pkde_core::CoreError),
}
