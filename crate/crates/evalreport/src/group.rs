use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use pkde_core::{energy_density, GeometryKind, GeometrySection};
use serde::{Deserialize, Serialize};

use crate::boxstats::BoxStats;
use crate::error::EvalError;
use crate::score::{LayerScore, ReportContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    Part,
    Section,
    LaserPower,
    ScanSpeed,
    HatchDistance,
    EnergyDensity,
}

impl GroupBy {
    pub const ALL: [GroupBy; 6] = [
        GroupBy::Part,
        GroupBy::Section,
        GroupBy::LaserPower,
        GroupBy::ScanSpeed,
        GroupBy::HatchDistance,
        GroupBy::EnergyDensity,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            GroupBy::Part => "part",
            GroupBy::Section => "section",
            GroupBy::LaserPower => "laser_power",
            GroupBy::ScanSpeed => "scan_speed",
            GroupBy::HatchDistance => "hatch_distance",
            GroupBy::EnergyDensity => "energy_density",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.as_str() == s)
    }

    fn is_parameter(&self) -> bool {
        !matches!(self, GroupBy::Part | GroupBy::Section)
    }
}

impl fmt::Display for GroupBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Value a score is grouped under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GroupKey {
    Part(u32),
    Section(GeometrySection),
    Value(f64),
}

impl Eq for GroupKey {}

impl Ord for GroupKey {
    fn cmp(&self, other: &Self) -> Ordering {
        use GroupKey::*;
        match (self, other) {
            (Part(a), Part(b)) => a.cmp(b),
            (Section(a), Section(b)) => a.cmp(b),
            (Value(a), Value(b)) => a.total_cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for GroupKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl GroupKey {
    fn rank(&self) -> u8 {
        match self {
            GroupKey::Part(_) => 0,
            GroupKey::Section(_) => 1,
            GroupKey::Value(_) => 2,
        }
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKey::Part(p) => write!(f, "{p}"),
            GroupKey::Section(s) => write!(f, "{s}"),
            GroupKey::Value(v) => write!(f, "{v}"),
        }
    }
}

/// Key of one score, or `None` when the score does not take part in this
/// grouping: sections exist for complex parts only, and parameter groupings
/// use the cube parts, whose parameters vary.
pub fn group_key(score: &LayerScore, by: GroupBy, context: &ReportContext) -> Result<Option<GroupKey>, EvalError> {
    if !by.is_parameter() {
        return Ok(match by {
            GroupBy::Part => Some(GroupKey::Part(score.part)),
            _ => score.section.map(GroupKey::Section),
        });
    }
    let Some(info) = context.parts.get(&score.part) else {
        return Ok(None);
    };
    if info.geometry != GeometryKind::Cube {
        return Ok(None);
    }
    let p = &info.params;
    let v = match by {
        GroupBy::LaserPower => p.laser_power,
        GroupBy::ScanSpeed => p.scan_speed,
        GroupBy::HatchDistance => p.hatch_distance,
        _ => energy_density(p)?,
    };
    Ok(Some(GroupKey::Value(v)))
}

/// Box statistics per group, in ascending key order.
pub fn group_stats(scores: &[LayerScore], by: GroupBy, context: &ReportContext) -> Result<BTreeMap<GroupKey, BoxStats>, EvalError> {
    let mut groups: BTreeMap<GroupKey, Vec<LayerScore>> = BTreeMap::new();
    for s in scores {
        if let Some(k) = group_key(s, by, context)? {
            groups.entry(k).or_default().push(s.clone());
        }
    }
    if groups.is_empty() {
        return Err(EvalError::EmptyGroups(by.to_string()));
    }
    Ok(groups
        .into_iter()
        .map(|(k, v)| (k, BoxStats::of(&v).expect("groups are non-empty")))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score::PartInfo;
    use pkde_core::reference_parameters;

    fn reference_context() -> ReportContext {
        ReportContext {
            layers_per_part: 712,
            parts: reference_parameters()
                .into_iter()
                .map(|p| {
                    let geometry = if p.part <= 3 { GeometryKind::Complex } else { GeometryKind::Cube };
                    (p.part, PartInfo { geometry, params: p })
                })
                .collect(),
        }
    }

    fn one_per_part(ctx: &ReportContext) -> Vec<LayerScore> {
        ctx.parts
            .keys()
            .map(|&part| LayerScore {
                part,
                layer: 300,
                mae: 0.01 * part as f64,
                section: ctx.section(part, 300).unwrap(),
            })
            .collect()
    }

    #[test]
    fn laser_power_keys_of_the_reference_build() {
        let ctx = reference_context();
        let g = group_stats(&one_per_part(&ctx), GroupBy::LaserPower, &ctx).unwrap();
        let keys: Vec<String> = g.keys().map(|k| k.to_string()).collect();
        assert_eq!(keys, ["340", "370", "390"]);
    }

    #[test]
    fn sections_only_from_complex_parts() {
        let ctx = reference_context();
        let g = group_stats(&one_per_part(&ctx), GroupBy::Section, &ctx).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[&GroupKey::Section(GeometrySection::Overhang)].count, 3);
    }

    #[test]
    fn empty_grouping_is_an_error() {
        let ctx = ReportContext::default();
        let s = vec![LayerScore {
            part: 9,
            layer: 1,
            mae: 0.1,
            section: None,
        }];
        assert!(matches!(group_stats(&s, GroupBy::Section, &ctx), Err(EvalError::EmptyGroups(_))));
        assert!(matches!(group_stats(&[], GroupBy::Part, &ctx), Err(EvalError::EmptyGroups(_))));
    }

    #[test]
    fn names_round_trip() {
        for g in GroupBy::ALL {
            assert_eq!(GroupBy::parse(g.as_str()), Some(g));
        }
    }
}
