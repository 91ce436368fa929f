use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use pkde_core::format::{read_image, write_image, write_pgm};
use pkde_core::{Dataset, LayerImage, LayerKey, Modality, SplitAssignment};
use pkde_evalreport::{build_report, emit_report, score_layers, GroupBy, ReportContext, ReportFormat, DEFAULT_THRESHOLD};
use pkde_nn::{predict_samples, samples_for, Weights, HEADER_FILE};
use rayon::prelude::*;

use crate::args::{EvalArgs, OutputArgs, Subset};
use crate::error::CliError;
use crate::metadata::RunClock;
use crate::paths::{self, layer_file, layer_stem};
use crate::{options_value, RunConfig};

pub const PREDICTIONS_DIR: &str = "predictions";

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub layers: usize,
    pub mean_mae: Option<f64>,
    pub flagged: usize,
}

fn selected_keys(dataset: &Dataset, split: Option<&SplitAssignment>, subset: Subset) -> BTreeSet<LayerKey> {
    match (split, subset) {
        (_, Subset::All) | (None, _) => dataset.keys().collect(),
        (Some(s), Subset::Train) => s.train.clone(),
        (Some(s), Subset::Validation) => s.validation.clone(),
        (Some(s), Subset::Test) => s.test.clone(),
    }
}

/// Prediction images `<dir>/part_NN/layer_NNNN.pktens` for `keys`.
pub(crate) fn read_predictions(dir: &Path, keys: &BTreeSet<LayerKey>) -> Result<BTreeMap<LayerKey, LayerImage>, CliError> {
    keys.par_iter()
        .map(|&(part, layer)| {
            let p = dir.join(layer_stem(part, layer, "pktens"));
            paths::require_file(&p, "prediction")?;
            Ok(((part, layer), read_image(&p, Modality::Pp)?))
        })
        .collect()
}

/// Writes the report files for `predictions` against `labels`.
pub(crate) fn write_report(
    out: &Path,
    o: &OutputArgs,
    ctx: ReportContext,
    predictions: &BTreeMap<LayerKey, LayerImage>,
    labels: &BTreeMap<LayerKey, LayerImage>,
) -> Result<EvalSummary, CliError> {
    let scores = score_layers(predictions, labels, &ctx)?;
    let group_by = o.group_by.clone().unwrap_or_else(|| GroupBy::ALL.to_vec());
    let threshold = o.flag_threshold.unwrap_or(DEFAULT_THRESHOLD);
    let formats = o.format.clone().unwrap_or_else(|| vec![ReportFormat::Json, ReportFormat::Csv]);
    let report = build_report(scores, ctx, &group_by, threshold, predictions, labels)?;
    emit_report(&report, out, &formats)?;
    if let Some(m) = report.mean_mae() {
        println!("{} layers, mean MAE {m:.5}, {} flagged above {threshold}", report.scores.len(), report.flags.len());
    }
    Ok(EvalSummary {
        layers: report.scores.len(),
        mean_mae: report.mean_mae(),
        flagged: report.flags.len(),
    })
}

pub fn run(rc: &RunConfig, a: &EvalArgs) -> Result<EvalSummary, CliError> {
    let clock = RunClock::start();
    let out = rc.require_out("eval")?;
    if a.weights.is_some() == a.predictions.is_some() {
        return Err(CliError::Usage("eval needs exactly one of --weights and --predictions".into()));
    }
    let (m, root) = paths::open_manifest(a.dataset.as_deref(), "eval")?;
    let split = match &a.split {
        Some(p) => {
            paths::require_file(p, "split file")?;
            Some(SplitAssignment::load(p)?)
        }
        None => None,
    };
    let subset = a.subset.unwrap_or(if split.is_some() { Subset::Test } else { Subset::All });
    if split.is_none() && subset != Subset::All {
        return Err(CliError::Usage("--subset other than `all` needs --split".into()));
    }
    if let Some(w) = &a.weights {
        paths::require_file(&w.join(HEADER_FILE), "model header")?;
    }
    let dataset = m.load_dataset(&root)?;
    let keys = selected_keys(&dataset, split.as_ref(), subset);
    if keys.is_empty() {
        return Err(CliError::Data("no layers selected for evaluation".into()));
    }
    paths::create_dir(&out)?;

    let predictions = match (&a.weights, &a.predictions) {
        (Some(w), _) => {
            let weights = Weights::load(w)?;
            let samples = samples_for(&dataset, &keys)?;
            let preds = predict_samples(&weights, &samples)?;
            preds
                .par_iter()
                .map(|p| -> Result<(), CliError> {
                    write_image(&out.join(layer_file(PREDICTIONS_DIR, p.part, p.layer, "pktens")), &p.image)?;
                    write_pgm(&out.join(layer_file(PREDICTIONS_DIR, p.part, p.layer, "pgm")), &p.image)?;
                    Ok(())
                })
                .collect::<Result<(), _>>()?;
            preds.into_iter().map(|p| ((p.part, p.layer), p.image)).collect()
        }
        (None, Some(dir)) => read_predictions(dir, &keys)?,
        (None, None) => unreachable!("checked above"),
    };
    let labels: BTreeMap<LayerKey, LayerImage> = dataset
        .select(&keys)
        .map(|t| (t.key(), t.pp.clone()))
        .collect();
    let summary = write_report(&out, &a.output, ReportContext::from_manifest(&m), &predictions, &labels)?;
    clock.write(&out, "eval", rc.seed, rc.threads, &options_value(a))?;
    Ok(summary)
}
