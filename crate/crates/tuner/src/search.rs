use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::Instant;

use pkde_core::{Dataset, SplitAssignment};
use pkde_nn::{samples_for, train_samples, HyperParams, ModelConfig, NnError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::TunerError;
use crate::space::{best_trial, SearchSpace, Trial};
use crate::suggest::{random_suggestion, suggest_pending};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub n_trials: usize,
    pub epochs: usize,
    /// Trials evaluated concurrently; above 1 the surrogate fills each round
    /// with constant-liar suggestions.
    pub parallel: usize,
    /// Uniform random search instead of the surrogate.
    pub random: bool,
    pub seed: u64,
}

impl SearchConfig {
    pub fn new(n_trials: usize, epochs: usize, seed: u64) -> Self {
        Self {
            n_trials,
            epochs,
            parallel: 1,
            random: false,
            seed,
        }
    }
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self::new(50, 60, 0)
    }
}

/// Result of evaluating one setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Completed(f64),
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub trials: Vec<Trial>,
    pub best_index: usize,
    pub best: HyperParams,
}

/// Runs trials until `cfg.n_trials` exist, continuing after `prior`.
/// `on_trial` sees every new trial in index order, e.g. to append it to a log.
pub fn search<F, L>(space: &SearchSpace, cfg: &SearchConfig, prior: Vec<Trial>, objective: F, mut on_trial: L) -> Result<SearchResult, TunerError>
where
    F: Fn(&HyperParams) -> Result<Outcome, TunerError> + Sync,
    L: FnMut(&Trial) -> Result<(), TunerError>,
{
    space.validate()?;
    if cfg.parallel == 0 {
        return Err(TunerError::Space("parallel must be at least 1".into()));
    }
    for (i, t) in prior.iter().enumerate() {
        if t.index != i {
            return Err(TunerError::Space(format!("prior trial {i} has index {}", t.index)));
        }
    }
    let mut trials = prior;
    while trials.len() < cfg.n_trials {
        let round = cfg.parallel.min(cfg.n_trials - trials.len());
        let mut pending: Vec<HyperParams> = Vec::with_capacity(round);
        for j in 0..round {
            let mut hp = if cfg.random {
                random_suggestion(space, cfg.seed, trials.len() + j, cfg.epochs)
            } else {
                suggest_pending(&trials, &pending, space, cfg.seed)
            };
            hp.epochs = cfg.epochs;
            pending.push(hp);
        }
        let results: Vec<(Outcome, f64)> = pending
            .par_iter()
            .map(|hp| {
                let t0 = Instant::now();
                objective(hp).map(|o| (o, t0.elapsed().as_secs_f64()))
            })
            .collect::<Result<_, _>>()?;
        for (hp, (outcome, secs)) in pending.into_iter().zip(results) {
            let index = trials.len();
            let trial = match outcome {
                Outcome::Completed(v) if v.is_finite() => Trial::completed(index, hp, v, secs),
                _ => Trial::diverged(index, hp, secs),
            };
            log::info!("trial {index}: lr {:.3e} batch {} -> {:?}", hp.learning_rate, hp.batch_size, trial.validation_mae);
            on_trial(&trial)?;
            trials.push(trial);
        }
    }
    let best_index = best_trial(&trials).ok_or(TunerError::AllDiverged(trials.len()))?;
    let best = trials[best_index].hp;
    Ok(SearchResult { trials, best_index, best })
}

/// Reads a JSON-lines search log; a missing file is an empty log. A final
/// line cut short by an interrupted write is dropped.
pub fn load_log(path: &Path) -> Result<Vec<Trial>, TunerError> {
    let io = |source| TunerError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io(e)),
    };
    let lines: Vec<String> = BufReader::new(file).lines().collect::<Result<_, _>>().map_err(io)?;
    let complete = std::fs::read(path).map_err(io)?.ends_with(b"\n");
    let mut trials = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Trial>(line) {
            Ok(t) => trials.push(t),
            Err(_) if i + 1 == lines.len() && !complete => {
                log::warn!("{}: dropping truncated final line", path.display());
            }
            Err(e) => {
                return Err(TunerError::Log {
                    path: path.display().to_string(),
                    line: i + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(trials)
}

pub fn append_trial(path: &Path, trial: &Trial) -> Result<(), TunerError> {
    let io = |source| TunerError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
    let line = serde_json::to_string(trial).expect("trial serializes");
    writeln!(f, "{line}").map_err(io)
}

/// Tunes `config` on the dataset's train split, scoring each trial by its
/// best validation MAE. With `log`, earlier trials are resumed from it and
/// new ones appended.
pub fn run_search(
    dataset: &Dataset,
    split: &SplitAssignment,
    config: ModelConfig,
    space: &SearchSpace,
    cfg: &SearchConfig,
    log: Option<&Path>,
) -> Result<SearchResult, TunerError> {
    let train = samples_for(dataset, &split.train)?;
    let validation = samples_for(dataset, &split.validation)?;
    if validation.is_empty() {
        return Err(NnError::Data("tuning needs a non-empty validation split".into()).into());
    }
    let prior = match log {
        Some(p) => load_log(p)?,
        None => Vec::new(),
    };
    if !prior.is_empty() {
        log::info!("resuming after {} logged trials", prior.len());
    }
    let objective = |hp: &HyperParams| match train_samples(&train, &validation, config, hp, cfg.seed) {
        Ok((_, report)) => Ok(Outcome::Completed(report.best_validation_mae.expect("validation is non-empty"))),
        Err(NnError::Diverged { .. }) => Ok(Outcome::Diverged),
        Err(e) => Err(e.into()),
    };
    search(space, cfg, prior, objective, |t| match log {
        Some(p) => append_trial(p, t),
        None => Ok(()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::analytic_objective;

    fn bench(hp: &HyperParams) -> Result<Outcome, TunerError> {
        Ok(Outcome::Completed(analytic_objective(hp)))
    }

    #[test]
    fn exact_trial_count_and_unique_pairs() {
        let space = SearchSpace::default();
        let r = search(&space, &SearchConfig::new(25, 60, 1), Vec::new(), bench, |_| Ok(())).unwrap();
        assert_eq!(r.trials.len(), 25);
        for (i, a) in r.trials.iter().enumerate() {
            assert_eq!(a.index, i);
            assert!(space.contains(&a.hp));
            for b in &r.trials[..i] {
                assert!(a.hp.learning_rate != b.hp.learning_rate || a.hp.batch_size != b.hp.batch_size);
            }
        }
    }

    #[test]
    fn single_trial_is_best() {
        let r = search(&SearchSpace::default(), &SearchConfig::new(1, 60, 1), Vec::new(), bench, |_| Ok(())).unwrap();
        assert_eq!(r.best_index, 0);
        assert_eq!(r.best, r.trials[0].hp);
    }

    #[test]
    fn all_diverged_is_an_error() {
        let r = search(&SearchSpace::default(), &SearchConfig::new(3, 60, 1), Vec::new(), |_| Ok(Outcome::Diverged), |_| Ok(()));
        assert!(matches!(r, Err(TunerError::AllDiverged(3))));
    }

    #[test]
    fn diverged_trials_are_skipped_for_best() {
        let objective = |hp: &HyperParams| {
            Ok(if hp.learning_rate > 1e-4 {
                Outcome::Diverged
            } else {
                Outcome::Completed(analytic_objective(hp))
            })
        };
        let r = search(&SearchSpace::default(), &SearchConfig::new(15, 60, 2), Vec::new(), objective, |_| Ok(())).unwrap();
        assert!(r.trials.iter().any(|t| t.score().is_none()));
        assert!(r.best.learning_rate <= 1e-4);
    }

    #[test]
    fn constant_liar_rounds_are_deterministic() {
        let space = SearchSpace::default();
        let mut cfg = SearchConfig::new(20, 60, 5);
        cfg.parallel = 4;
        let a = search(&space, &cfg, Vec::new(), bench, |_| Ok(())).unwrap();
        let b = search(&space, &cfg, Vec::new(), bench, |_| Ok(())).unwrap();
        let hps = |r: &SearchResult| r.trials.iter().map(|t| t.hp).collect::<Vec<_>>();
        assert_eq!(hps(&a), hps(&b));
    }

    #[test]
    fn log_resume_matches_uninterrupted_run() {
        let space = SearchSpace::default();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("search.jsonl");
        let full = search(&space, &SearchConfig::new(14, 60, 8), Vec::new(), bench, |_| Ok(())).unwrap();

        search(&space, &SearchConfig::new(11, 60, 8), Vec::new(), bench, |t| append_trial(&path, t)).unwrap();
        let prior = load_log(&path).unwrap();
        assert_eq!(prior.len(), 11);
        let resumed = search(&space, &SearchConfig::new(14, 60, 8), prior, bench, |t| append_trial(&path, t)).unwrap();
        let hps = |r: &SearchResult| r.trials.iter().map(|t| t.hp).collect::<Vec<_>>();
        assert_eq!(hps(&full), hps(&resumed));
        assert_eq!(load_log(&path).unwrap().len(), 14);
    }

    #[test]
    fn truncated_last_line_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        let t = Trial::completed(0, HyperParams::default(), 0.1, 0.0);
        append_trial(&path, &t).unwrap();
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        write!(f, "{{\"index\":1,\"hp\"").unwrap();
        assert_eq!(load_log(&path).unwrap(), vec![t]);
        writeln!(f).unwrap();
        assert!(matches!(load_log(&path), Err(TunerError::Log { line: 2, .. })));
        assert!(load_log(&dir.path().join("missing.jsonl")).unwrap().is_empty());
    }
}
