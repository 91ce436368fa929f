use std::collections::BTreeMap;

use pkde_core::{LayerImage, LayerKey};
use serde::{Deserialize, Serialize};

use crate::score::LayerScore;

/// Default MAE above which a layer counts as a failed prediction.
pub const DEFAULT_THRESHOLD: f64 = 0.05;
/// A prediction whose maximum stays below this shows no pore at all.
pub const NO_PREDICTION_MAX: f64 = 0.1;
/// ... when the label's maximum reaches this.
pub const LABEL_PRESENT_MAX: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureMode {
    /// Nothing predicted where the label has a pore.
    NoPrediction,
    /// Probability mass in the wrong place.
    Misaligned,
}

impl FailureMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            FailureMode::NoPrediction => "no_prediction",
            FailureMode::Misaligned => "misaligned",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureFlag {
    pub part: u32,
    pub layer: u32,
    pub mae: f64,
    pub mode: FailureMode,
}

fn max_of(img: Option<&LayerImage>) -> f64 {
    img.map_or(0.0, |i| i.data().iter().fold(0.0f32, |a, &b| a.max(b)) as f64)
}

/// Layers with MAE above `threshold`, each with its failure mode.
pub fn flag_failures(
    scores: &[LayerScore],
    threshold: f64,
    predictions: &BTreeMap<LayerKey, LayerImage>,
    labels: &BTreeMap<LayerKey, LayerImage>,
) -> Vec<FailureFlag> {
    scores
        .iter()
        .filter(|s| s.mae > threshold)
        .map(|s| {
            let pred_max = max_of(predictions.get(&s.key()));
            let label_max = max_of(labels.get(&s.key()));
            let mode = if pred_max < NO_PREDICTION_MAX && label_max >= LABEL_PRESENT_MAX {
                FailureMode::NoPrediction
            } else {
                FailureMode::Misaligned
            };
            FailureFlag {
                part: s.part,
                layer: s.layer,
                mae: s.mae,
                mode,
            }
        })
        .collect()
}
