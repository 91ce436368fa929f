use std::collections::BTreeMap;

use pkde_core::{PorePosition, PoreSet};

use crate::crop::CropFrame;
use crate::detect::DetectedPore;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerAssignment {
    /// Pore sets keyed by 1-based layer, in crop-frame coordinates. Layers
    /// without pores are absent.
    pub layers: BTreeMap<u32, PoreSet>,
    /// Pores whose centroid fell outside the crop frame.
    pub dropped: usize,
}

impl LayerAssignment {
    /// Pore set for `layer`, empty when nothing was assigned.
    pub fn layer(&self, part: u32, layer: u32) -> PoreSet {
        self.layers.get(&layer).cloned().unwrap_or_else(|| PoreSet::empty(part, layer))
    }
}

/// Assigns detected pores to layers and moves them into the crop frame.
///
/// Layer index is `⌊z · voxel_size / layer_thickness⌋ + 1`, so a centroid
/// exactly on a boundary belongs to the upper layer.
pub fn pores_to_layers(
    part: u32,
    pores: &[DetectedPore],
    voxel_size: f64,
    layer_thickness: f64,
    frame: &CropFrame,
) -> LayerAssignment {
    let mut layers: BTreeMap<u32, PoreSet> = BTreeMap::new();
    let mut dropped = 0;
    for p in pores {
        let [x, y, z] = p.centroid;
        let Some((lx, ly)) = frame.to_local(x, y) else {
            dropped += 1;
            continue;
        };
        let layer = (z * voxel_size / layer_thickness).floor() as u32 + 1;
        layers
            .entry(layer)
            .or_insert_with(|| PoreSet::empty(part, layer))
            .pores
            .push(PorePosition::new(lx, ly));
    }
    LayerAssignment { layers, dropped }
}
