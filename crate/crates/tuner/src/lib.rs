//! Hyperparameter search over learning rate and batch size.
//!
//! The first trials cover the space quasi-randomly; after that a Gaussian
//! process over (log learning rate, one-hot batch size) proposes the point
//! with the highest expected improvement.

pub mod bench;
mod error;
pub mod gp;
mod search;
mod space;
mod suggest;

pub use error::TunerError;
pub use search::{append_trial, load_log, run_search, search, Outcome, SearchConfig, SearchResult};
pub use space::{best_trial, SearchSpace, Trial, TrialStatus};
pub use suggest::{random_suggestion, suggest, suggest_pending, WARMUP};
