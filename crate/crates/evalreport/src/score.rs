use std::collections::BTreeMap;

use pkde_core::manifest::Manifest;
use pkde_core::{GeometryKind, GeometrySection, LayerImage, LayerKey, ProcessParams, SectionLayout};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::EvalError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartInfo {
    pub geometry: GeometryKind,
    pub params: ProcessParams,
}

/// What the scores need to know about the build: per-part geometry and
/// process parameters, and the layer count that fixes section boundaries.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportContext {
    pub layers_per_part: u32,
    pub parts: BTreeMap<u32, PartInfo>,
}

impl ReportContext {
    pub fn from_manifest(m: &Manifest) -> Self {
        Self {
            layers_per_part: m.layers_per_part,
            parts: m
                .part_info
                .iter()
                .map(|p| {
                    (
                        p.part,
                        PartInfo {
                            geometry: p.geometry,
                            params: p.params.clone(),
                        },
                    )
                })
                .collect(),
        }
    }

    /// Section of a complex part's layer; `None` for other parts.
    pub fn section(&self, part: u32, layer: u32) -> Result<Option<GeometrySection>, EvalError> {
        match self.parts.get(&part) {
            Some(info) if info.geometry == GeometryKind::Complex => Ok(Some(SectionLayout::new(self.layers_per_part)?.section(layer)?)),
            _ => Ok(None),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerScore {
    pub part: u32,
    pub layer: u32,
    pub mae: f64,
    pub section: Option<GeometrySection>,
}

impl LayerScore {
    pub fn key(&self) -> LayerKey {
        (self.part, self.layer)
    }
}

/// Per-pixel mean absolute error.
pub fn layer_mae(pred: &LayerImage, label: &LayerImage) -> f64 {
    let n = pred.data().len() as f64;
    pred.data().iter().zip(label.data()).map(|(&p, &l)| (p as f64 - l as f64).abs()).sum::<f64>() / n
}

/// One score per key, in key order.
pub fn score_layers(
    predictions: &BTreeMap<LayerKey, LayerImage>,
    labels: &BTreeMap<LayerKey, LayerImage>,
    context: &ReportContext,
) -> Result<Vec<LayerScore>, EvalError> {
    let missing_labels: Vec<LayerKey> = predictions.keys().filter(|k| !labels.contains_key(k)).copied().collect();
    let missing_predictions: Vec<LayerKey> = labels.keys().filter(|k| !predictions.contains_key(k)).copied().collect();
    if !missing_labels.is_empty() || !missing_predictions.is_empty() {
        return Err(EvalError::KeyMismatch {
            missing_labels,
            missing_predictions,
        });
    }
    let pairs: Vec<(&LayerKey, &LayerImage)> = predictions.iter().collect();
    pairs
        .par_iter()
        .map(|&(&key, pred)| {
            let label = &labels[&key];
            if pred.dims() != label.dims() {
                return Err(EvalError::Extent {
                    key,
                    pred: pred.dims(),
                    label: label.dims(),
                });
            }
            Ok(LayerScore {
                part: key.0,
                layer: key.1,
                mae: layer_mae(pred, label),
                section: context.section(key.0, key.1)?,
            })
        })
        .collect()
}
