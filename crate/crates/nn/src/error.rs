use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape error at {layer}: {message}")]
    Shape { layer: String, message: String },
    #[error("numerical failure at {layer}: {message}")]
    Numerical { layer: String, message: String },
    #[error("training diverged at epoch {epoch}, batch {batch}: loss {loss}")]
    Diverged { epoch: usize, batch: usize, loss: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error(transparent)]
    Core(#[from] pkde_core::CoreError),
}
