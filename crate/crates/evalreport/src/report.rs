use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use pkde_core::{energy_density, GeometrySection, LayerImage, LayerKey};
use serde::{Deserialize, Serialize};

use crate::boxstats::BoxStats;
use crate::error::EvalError;
use crate::flags::{flag_failures, FailureFlag};
use crate::group::{group_stats, GroupBy, GroupKey};
use crate::score::{LayerScore, ReportContext};

pub const JSON_FILE: &str = "report.json";
pub const SCORES_CSV: &str = "scores.csv";
pub const GROUPS_CSV: &str = "groups.csv";
pub const FLAGS_CSV: &str = "flags.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub threshold: f64,
    pub context: ReportContext,
    pub scores: Vec<LayerScore>,
    pub groups: BTreeMap<GroupBy, BTreeMap<GroupKey, BoxStats>>,
    pub flags: Vec<FailureFlag>,
}

/// Scores, box statistics for every grouping that has members, and flags.
pub fn build_report(
    scores: Vec<LayerScore>,
    context: ReportContext,
    group_by: &[GroupBy],
    threshold: f64,
    predictions: &BTreeMap<LayerKey, LayerImage>,
    labels: &BTreeMap<LayerKey, LayerImage>,
) -> Result<Report, EvalError> {
    let mut groups = BTreeMap::new();
    for &by in group_by {
        match group_stats(&scores, by, &context) {
            Ok(g) => {
                groups.insert(by, g);
            }
            Err(EvalError::EmptyGroups(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let flags = flag_failures(&scores, threshold, predictions, labels);
    Ok(Report {
        threshold,
        context,
        scores,
        groups,
        flags,
    })
}

#[derive(Serialize)]
struct JsonGroup<'a> {
    key: String,
    #[serde(flatten)]
    stats: &'a BoxStats,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    threshold: f64,
    layer_count: usize,
    mean_mae: Option<f64>,
    scores: &'a [LayerScore],
    groups: BTreeMap<&'static str, Vec<JsonGroup<'a>>>,
    flags: &'a [FailureFlag],
}

impl Report {
    pub fn mean_mae(&self) -> Option<f64> {
        (!self.scores.is_empty()).then(|| self.scores.iter().map(|s| s.mae).sum::<f64>() / self.scores.len() as f64)
    }

    pub fn to_json(&self) -> String {
        let groups = self
            .groups
            .iter()
            .map(|(by, g)| {
                let entries = g.iter().map(|(k, stats)| JsonGroup { key: k.to_string(), stats }).collect();
                (by.as_str(), entries)
            })
            .collect();
        let doc = JsonReport {
            threshold: self.threshold,
            layer_count: self.scores.len(),
            mean_mae: self.mean_mae(),
            scores: &self.scores,
            groups,
            flags: &self.flags,
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ScoreRow {
    part: u32,
    layer: u32,
    mae: f64,
    section: Option<String>,
    laser_power: Option<f64>,
    scan_speed: Option<f64>,
    hatch_distance: Option<f64>,
    energy_density: Option<f64>,
}

#[derive(Debug, Serialize)]
struct GroupRow<'a> {
    group_by: &'a str,
    key: String,
    count: usize,
    median: f64,
    q1: f64,
    q3: f64,
    whisker_low: f64,
    whisker_high: f64,
    outliers: usize,
}

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<(), EvalError> {
    let err = |source| EvalError::Csv {
        path: path.display().to_string(),
        source,
    };
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(err)?;
    // explicit header so an empty table still has one
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    w.flush().map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes the report in each requested format and returns the file paths.
pub fn emit_report(report: &Report, dir: &Path, formats: &[ReportFormat]) -> Result<Vec<PathBuf>, EvalError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| EvalError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut written = Vec::new();
    if formats.contains(&ReportFormat::Json) {
        let p = dir.join(JSON_FILE);
        fs::write(&p, report.to_json()).map_err(io(&p))?;
        written.push(p);
    }
    if formats.contains(&ReportFormat::Csv) {
        let p = dir.join(SCORES_CSV);
        let mut rows = Vec::with_capacity(report.scores.len());
        for s in &report.scores {
            let params = report.context.parts.get(&s.part).map(|i| &i.params);
            rows.push(ScoreRow {
                part: s.part,
                layer: s.layer,
                mae: s.mae,
                section: s.section.map(|x| x.as_str().to_string()),
                laser_power: params.map(|p| p.laser_power),
                scan_speed: params.map(|p| p.scan_speed),
                hatch_distance: params.map(|p| p.hatch_distance),
                energy_density: params.map(energy_density).transpose()?,
            });
        }
        let header = ["part", "layer", "mae", "section", "laser_power", "scan_speed", "hatch_distance", "energy_density"];
        write_csv(&p, &header, rows)?;
        written.push(p);

        let p = dir.join(GROUPS_CSV);
        let rows = report.groups.iter().flat_map(|(by, g)| {
            g.iter().map(move |(k, b)| GroupRow {
                group_by: by.as_str(),
                key: k.to_string(),
                count: b.count,
                median: b.median,
                q1: b.q1,
                q3: b.q3,
                whisker_low: b.whisker_low,
                whisker_high: b.whisker_high,
                outliers: b.outliers.len(),
            })
        });
        let header = ["group_by", "key", "count", "median", "q1", "q3", "whisker_low", "whisker_high", "outliers"];
        write_csv(&p, &header, rows)?;
        written.push(p);

        let p = dir.join(FLAGS_CSV);
        let rows = report.flags.iter().map(|f| (f.part, f.layer, f.mae, f.mode.as_str()));
        write_csv(&p, &["part", "layer", "mae", "mode"], rows)?;
        written.push(p);
    }
    Ok(written)
}

/// Reads the scores table written by [`emit_report`].
pub fn read_scores_csv(path: &Path) -> Result<Vec<LayerScore>, EvalError> {
    let err = |source| EvalError::Csv {
        path: path.display().to_string(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(err)?;
    let mut out = Vec::new();
    for row in r.deserialize::<ScoreRow>() {
        let row = row.map_err(err)?;
        out.push(LayerScore {
            part: row.part,
            layer: row.layer,
            mae: row.mae,
            section: row.section.as_deref().and_then(GeometrySection::parse),
        });
    }
    Ok(out)
}
