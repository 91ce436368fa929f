use std::path::Path;

use pkde_nn::{train, HyperParams, ModelConfig, SkipMode};

use crate::args::{ModelArgs, TrainArgs};
use crate::commands::split_for;
use crate::error::CliError;
use crate::metadata::RunClock;
use crate::{options_value, paths, RunConfig};

pub const DEFAULT_DEPTH: usize = 3;
pub const DEFAULT_WIDTH: usize = 16;
pub const WEIGHTS_DIR: &str = "weights";
pub const REPORT_FILE: &str = "train_report.json";

pub(crate) fn model_config(a: &ModelArgs) -> Result<ModelConfig, CliError> {
    let c = ModelConfig::new(
        a.depth.unwrap_or(DEFAULT_DEPTH),
        a.width.unwrap_or(DEFAULT_WIDTH),
        a.skip.unwrap_or(SkipMode::Concat),
    );
    c.validate()?;
    Ok(c)
}

/// Best setting recorded in a tuning result file.
fn tuned(path: &Path) -> Result<HyperParams, CliError> {
    paths::require_file(path, "tuning result")?;
    let text = std::fs::read_to_string(path).map_err(|e| crate::error::io_error(path, e))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_value(v["best"].clone()).map_err(|e| CliError::Data(format!("{}: no usable `best` entry: {e}", path.display())))
}

pub fn run(rc: &RunConfig, a: &TrainArgs) -> Result<(), CliError> {
    let clock = RunClock::start();
    let seed = rc.require_seed("train")?;
    let out = rc.require_out("train")?;
    let config = model_config(&a.model)?;
    let base = match &a.hyperparams {
        Some(p) => tuned(p)?,
        None => HyperParams::default(),
    };
    let hp = HyperParams::new(
        a.lr.unwrap_or(base.learning_rate),
        a.batch.unwrap_or(base.batch_size),
        a.epochs.unwrap_or(base.epochs),
    )?;
    let (m, root) = paths::open_manifest(a.dataset.as_deref(), "train")?;
    let dataset = m.load_dataset(&root)?;
    paths::create_dir(&out)?;
    let split = split_for(&dataset, a.split.as_deref(), seed, &out)?;
    let (weights, report) = train(&dataset, &split, config, &hp, seed)?;
    weights.save(&out.join(WEIGHTS_DIR))?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    paths::write_text(&out.join(REPORT_FILE), &text)?;
    match report.best_validation_mae {
        Some(v) => log::info!("best epoch {} with validation MAE {v:.5}", report.best_epoch),
        None => log::info!("trained {} epochs without validation data", hp.epochs),
    }
    clock.write(&out, "train", Some(seed), rc.threads, &options_value(a))?;
    Ok(())
}
