//! Geometry-feature sections of the complex part.
//!
//! The reference build has 712 layers split into four feature families. For
//! builds with a different layer count `Λ` the boundaries are scaled
//! proportionally: layer `l` of `Λ` maps to reference layer
//! `ceil(l · 712 / Λ)` and takes that layer's section.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// Layer count of the reference build.
pub const REFERENCE_LAYERS: u32 = 712;

/// Last layer of each section at the reference layer count.
const REFERENCE_ENDS: [u32; 4] = [245, 430, 487, 712];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometrySection {
    PreOverhang,
    Overhang,
    PreRound,
    Round,
}

impl GeometrySection {
    pub const ALL: [GeometrySection; 4] = [
        GeometrySection::PreOverhang,
        GeometrySection::Overhang,
        GeometrySection::PreRound,
        GeometrySection::Round,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            GeometrySection::PreOverhang => "pre_overhang",
            GeometrySection::Overhang => "overhang",
            GeometrySection::PreRound => "pre_round",
            GeometrySection::Round => "round",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|sec| sec.as_str() == s)
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for GeometrySection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Section of layer `l` in the 712-layer reference build.
pub fn section_of_layer(layer: u32) -> Result<GeometrySection, CoreError> {
    SectionLayout::reference().section(layer)
}

/// Section boundaries for a build with `layers` layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SectionLayout {
    layers: u32,
}

impl SectionLayout {
    pub fn new(layers: u32) -> Result<Self, CoreError> {
        if layers == 0 {
            return Err(CoreError::LayerOutOfRange { layer: 0, max: 0 });
        }
        Ok(Self { layers })
    }

    pub fn reference() -> Self {
        Self {
            layers: REFERENCE_LAYERS,
        }
    }

    pub fn layers(&self) -> u32 {
        self.layers
    }

    pub fn section(&self, layer: u32) -> Result<GeometrySection, CoreError> {
        if layer == 0 || layer > self.layers {
            return Err(CoreError::LayerOutOfRange {
                layer,
                max: self.layers,
            });
        }
        let reference = self.reference_layer(layer);
        let idx = REFERENCE_ENDS.iter().position(|&end| reference <= end).unwrap_or(3);
        Ok(GeometrySection::ALL[idx])
    }

    /// Reference layer `ceil(l · 712 / Λ)`, always in `1..=712`.
    pub fn reference_layer(&self, layer: u32) -> u32 {
        let num = layer as u64 * REFERENCE_LAYERS as u64;
        num.div_ceil(self.layers as u64) as u32
    }

    /// Inclusive layer ranges per section. Sections that receive no layers
    /// (possible for very small `Λ`) are omitted.
    pub fn ranges(&self) -> Vec<(GeometrySection, u32, u32)> {
        let mut out: Vec<(GeometrySection, u32, u32)> = Vec::new();
        for l in 1..=self.layers {
            let sec = self.section(l).expect("in range");
            match out.last_mut() {
                Some(last) if last.0 == sec => last.2 = l,
                _ => out.push((sec, l, l)),
            }
        }
        out
    }

    /// True when every reference boundary maps onto an integer layer, i.e.
    /// the scaled ranges are exact.
    pub fn is_exact(&self) -> bool {
        REFERENCE_ENDS
            .iter()
            .all(|&end| (end as u64 * self.layers as u64) % REFERENCE_LAYERS as u64 == 0)
    }

    /// Fraction of the section's extent reached by `layer`, in `[0, 1]`.
    pub fn progress(&self, layer: u32) -> Result<f64, CoreError> {
        let sec = self.section(layer)?;
        let reference = self.reference_layer(layer);
        let i = sec.index();
        let start = if i == 0 { 1 } else { REFERENCE_ENDS[i - 1] + 1 };
        let end = REFERENCE_ENDS[i];
        Ok((reference - start) as f64 / (end - start).max(1) as f64)
    }
}
