use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("layer {layer} outside 1..={layers}")]
    LayerOutOfRange { layer: u32, layers: u32 },
    #[error("duplicate part {0} in build plan")]
    DuplicatePart(u32),
    #[error("empty cross-section mask (part {part}, layer {layer})")]
    EmptyMask { part: u32, layer: u32 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("plan file {path}: {message}")]
    Plan { path: String, message: String },
    #[error(transparent)]
    Core(#[from] pkde_core::CoreError),
    #[error(transparent)]
    Xct(#[from] pkde_xct::XctError),
}
