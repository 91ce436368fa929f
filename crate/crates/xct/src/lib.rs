//! Computed-tomography side of the pipeline.
//!
//! A [`VoxelVolume`] stands in for the reconstructed CT scan. Pores are the
//! connected regions of low-intensity voxels; they are mapped into layer
//! frames by rotating the volume into build orientation, slicing it at the
//! layer thickness and cropping to the part's reference rectangle.

mod crop;
mod detect;
mod error;
mod layers;
mod rotation;
mod slice;
mod volume;

pub use crop::{crop, CropFrame, Edge};
pub use detect::{detect_pores, detect_pores_with, DetectOptions, DetectedPore, Detection};
pub use error::XctError;
pub use layers::{pores_to_layers, LayerAssignment};
pub use rotation::{rotate_to_build_axis, Rotation};
pub use slice::slice_volume;
pub use volume::VoxelVolume;
