use std::collections::BTreeSet;
use std::path::Path;

use pkde_core::{reference_parameters, GeometryKind, ProcessParams};
use serde::{Deserialize, Serialize};

use crate::error::SynthError;

/// One part of a build plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub geometry: GeometryKind,
    #[serde(flatten)]
    pub params: ProcessParams,
}

/// Plan file contents: `{"parts": [{"part": 1, "geometry": "complex",
/// "laser_power": 370, "scan_speed": 1300, "hatch_distance": 190,
/// "layer_thickness": 30}, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildPlan {
    pub parts: Vec<PlanEntry>,
}

impl BuildPlan {
    /// The ten-part reference build: three complex parts at positions 1 to 3
    /// and seven cubes with varying parameters.
    pub fn reference() -> Self {
        let parts = reference_parameters()
            .into_iter()
            .map(|params| PlanEntry {
                geometry: if params.part <= 3 {
                    GeometryKind::Complex
                } else {
                    GeometryKind::Cube
                },
                params,
            })
            .collect();
        Self { parts }
    }

    /// Checks parameters and rejects duplicate or zero part indices.
    pub fn validate(&self) -> Result<(), SynthError> {
        let mut seen = BTreeSet::new();
        for e in &self.parts {
            if e.params.part == 0 {
                return Err(SynthError::Config("part indices start at 1".into()));
            }
            if !seen.insert(e.params.part) {
                return Err(SynthError::DuplicatePart(e.params.part));
            }
            e.params.validate()?;
        }
        Ok(())
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self, SynthError> {
        let plan: BuildPlan = serde_json::from_str(text).map_err(|e| SynthError::Plan {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self, SynthError> {
        let text = std::fs::read_to_string(path).map_err(|e| SynthError::Plan {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan serializes");
        s.push('\n');
        s
    }
}
