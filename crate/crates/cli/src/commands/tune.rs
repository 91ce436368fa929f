use pkde_tuner::{run_search, SearchConfig, SearchSpace, Trial};
use serde::Serialize;

use crate::args::TuneArgs;
use crate::commands::split_for;
use crate::commands::train::model_config;
use crate::error::CliError;
use crate::metadata::RunClock;
use crate::{options_value, paths, RunConfig};

pub const LOG_FILE: &str = "trials.jsonl";
pub const RESULT_FILE: &str = "tune_result.json";

#[derive(Serialize)]
struct TuneResult<'a> {
    best_index: usize,
    best: pkde_nn::HyperParams,
    best_validation_mae: Option<f64>,
    trials: &'a [Trial],
}

pub fn run(rc: &RunConfig, a: &TuneArgs) -> Result<(), CliError> {
    let clock = RunClock::start();
    let seed = rc.require_seed("tune")?;
    let out = rc.require_out("tune")?;
    let config = model_config(&a.model)?;
    let defaults = SearchConfig::default();
    let cfg = SearchConfig {
        n_trials: a.trials.unwrap_or(defaults.n_trials),
        epochs: a.epochs.unwrap_or(defaults.epochs),
        parallel: a.parallel.unwrap_or(1),
        random: a.random,
        seed,
    };
    if cfg.n_trials == 0 || cfg.parallel == 0 {
        return Err(CliError::Usage("--trials and --parallel must be at least 1".into()));
    }
    let (m, root) = paths::open_manifest(a.dataset.as_deref(), "tune")?;
    let dataset = m.load_dataset(&root)?;
    paths::create_dir(&out)?;
    let split = split_for(&dataset, a.split.as_deref(), seed, &out)?;
    let r = run_search(&dataset, &split, config, &SearchSpace::default(), &cfg, Some(&out.join(LOG_FILE)))?;
    let result = TuneResult {
        best_index: r.best_index,
        best: r.best,
        best_validation_mae: r.trials[r.best_index].validation_mae,
        trials: &r.trials,
    };
    let text = serde_json::to_string_pretty(&result).expect("result serializes") + "\n";
    paths::write_text(&out.join(RESULT_FILE), &text)?;
    println!(
        "best trial {}: learning rate {:.3e}, batch {}, validation MAE {:.5}",
        r.best_index,
        r.best.learning_rate,
        r.best.batch_size,
        result.best_validation_mae.unwrap_or(f64::NAN)
    );
    clock.write(&out, "tune", Some(seed), rc.threads, &options_value(a))?;
    Ok(())
}
