//! Shared domain types for the pore-probability pipeline.
//!
//! Everything downstream (labeling, CT processing, synthesis, training and
//! evaluation) speaks in terms of the types defined here: pore positions per
//! layer, single-channel layer images, process parameters and the dataset of
//! `(HR, OT, PP)` triplets keyed by part and layer.

pub mod dataset;
pub mod energy;
pub mod error;
pub mod format;
pub mod manifest;
pub mod rng;
pub mod section;
pub mod types;

pub use dataset::{assemble_dataset, split_dataset, Dataset, SplitAssignment, SplitFractions, TripletSource};
pub use energy::{energy_density, reference_parameters};
pub use error::CoreError;
pub use section::{section_of_layer, GeometrySection, SectionLayout};
pub use types::{GeometryKind, LayerImage, LayerKey, LayerTriplet, Modality, PorePosition, PoreSet, ProcessParams};
