use pkde_core::LayerKey;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("prediction/label keys differ: no label for {missing_labels:?}, no prediction for {missing_predictions:?}")]
    KeyMismatch {
        missing_labels: Vec<LayerKey>,
        missing_predictions: Vec<LayerKey>,
    },
    #[error("layer {key:?}: prediction {pred:?} vs label {label:?}")]
    Extent {
        key: LayerKey,
        pred: (usize, usize),
        label: (usize, usize),
    },
    #[error("no scores to group by {0}")]
    EmptyGroups(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error(transparent)]
    Core(#[from] pkde_core::CoreError),
}
