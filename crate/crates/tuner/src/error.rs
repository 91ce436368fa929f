use thiserror::Error;

#[derive(Debug, Error)]
pub enum TunerError {
    #[error("invalid search space: {0}")]
    Space(String),
    #[error("all {0} trials diverged")]
    AllDiverged(usize),
    #[error("search log {path}, line {line}: {message}")]
    Log { path: String, line: usize, message: String },
    #[error("search log {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Nn(#[from] pkde_nn::NnError),
}
