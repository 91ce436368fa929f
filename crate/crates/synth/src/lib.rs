//! Synthetic builds with known ground truth.
//!
//! Each part gets a cross-section mask per layer, a set of seeded pores
//! whose rate depends on the part's energy density, rendered HR and OT
//! monitoring images, and a CT-like voxel volume in which every seeded pore
//! is carved as a void. The volume is stored in a scan orientation that
//! differs from the build orientation, so downstream processing has to
//! rotate, slice and crop it like a real scan.

mod build;
mod error;
mod geometry;
mod plan;
mod pores;
mod render;

pub use build::{
    build_synthetic_dataset, synthesize_part, write_synthetic_dataset, SynthConfig, SynthLayer, SynthPart,
    VolumeConfig,
};
pub use error::SynthError;
pub use geometry::{cross_section, GeometrySpec};
pub use plan::{BuildPlan, PlanEntry};
pub use pores::{pore_rate, seed_pores, PoreModel};
pub use render::{ot_brightness, render_modalities, RenderConfig};
