//! Scoring predicted pore-probability images against their labels.
//!
//! Layers are scored by MAE, grouped by part, geometry section or process
//! parameter, summarized as box-plot statistics, and written out as JSON and
//! CSV ready for plotting.

mod boxstats;
mod error;
mod flags;
mod group;
mod report;
mod score;

pub use boxstats::{quantile, BoxStats};
pub use error::EvalError;
pub use flags::{flag_failures, FailureFlag, FailureMode, DEFAULT_THRESHOLD, LABEL_PRESENT_MAX, NO_PREDICTION_MAX};
pub use group::{group_key, group_stats, GroupBy, GroupKey};
pub use pkde_core::section_of_layer;
pub use report::{build_report, emit_report, read_scores_csv, Report, ReportFormat, FLAGS_CSV, GROUPS_CSV, JSON_FILE, SCORES_CSV};
pub use score::{layer_mae, score_layers, LayerScore, PartInfo, ReportContext};
