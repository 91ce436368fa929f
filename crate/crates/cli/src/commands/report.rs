use std::collections::{BTreeMap, BTreeSet};

use pkde_core::format::read_image;
use pkde_core::manifest::resolve;
use pkde_core::{LayerImage, LayerKey, Modality};
use pkde_evalreport::{build_report, emit_report, read_scores_csv, GroupBy, ReportContext, ReportFormat, DEFAULT_THRESHOLD, SCORES_CSV};

use crate::args::ReportArgs;
use crate::commands::eval::read_predictions;
use crate::error::CliError;
use crate::metadata::RunClock;
use crate::{options_value, paths, RunConfig};

pub fn run(rc: &RunConfig, a: &ReportArgs) -> Result<(), CliError> {
    let clock = RunClock::start();
    let out = rc.require_out("report")?;
    let scores_path = match &a.scores {
        Some(p) if p.is_dir() => p.join(SCORES_CSV),
        Some(p) => p.clone(),
        None => return Err(CliError::Usage("report needs --scores".into())),
    };
    paths::require_file(&scores_path, "scores file")?;
    let mut scores = read_scores_csv(&scores_path)?;
    let keys: BTreeSet<LayerKey> = scores.iter().map(|s| s.key()).collect();

    let (ctx, labels) = match &a.dataset {
        Some(d) => {
            let (m, root) = paths::open_manifest(Some(d), "report")?;
            let mut labels = BTreeMap::new();
            for t in m.triplets.iter().filter(|t| keys.contains(&t.key())) {
                if let Some(pp) = &t.pp {
                    labels.insert(t.key(), read_image(&resolve(&root, pp), Modality::Pp)?);
                }
            }
            (ReportContext::from_manifest(&m), labels)
        }
        None => (ReportContext::default(), BTreeMap::<LayerKey, LayerImage>::new()),
    };
    // sections follow the dataset context, not whatever the CSV carried
    for s in &mut scores {
        s.section = ctx.section(s.part, s.layer)?;
    }
    let predictions = match &a.predictions {
        Some(dir) => read_predictions(dir, &keys)?,
        None => BTreeMap::new(),
    };
    if predictions.is_empty() || labels.is_empty() {
        log::info!("no prediction or label images given; flagged layers are reported as misaligned");
    }
    let group_by = a.output.group_by.clone().unwrap_or_else(|| GroupBy::ALL.to_vec());
    let threshold = a.output.flag_threshold.unwrap_or(DEFAULT_THRESHOLD);
    let formats = a.output.format.clone().unwrap_or_else(|| vec![ReportFormat::Json, ReportFormat::Csv]);
    let report = build_report(scores, ctx, &group_by, threshold, &predictions, &labels)?;
    paths::create_dir(&out)?;
    emit_report(&report, &out, &formats)?;
    println!("{} layers in {} groupings, {} flagged", report.scores.len(), report.groups.len(), report.flags.len());
    clock.write(&out, "report", rc.seed, rc.threads, &options_value(a))?;
    Ok(())
}
