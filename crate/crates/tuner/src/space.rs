use pkde_nn::{HyperParams, BATCH_CHOICES, LR_RANGE};
use serde::{Deserialize, Serialize};

use crate::error::TunerError;

/// Learning rate range (searched in log space) and the batch size choices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub lr_range: (f64, f64),
    pub batch_choices: Vec<usize>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            lr_range: LR_RANGE,
            batch_choices: BATCH_CHOICES.to_vec(),
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<(), TunerError> {
        let (lo, hi) = self.lr_range;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(TunerError::Space(format!("learning rate range [{lo}, {hi}]")));
        }
        if self.batch_choices.is_empty() {
            return Err(TunerError::Space("no batch sizes".into()));
        }
        let mut seen = self.batch_choices.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.batch_choices.len() || seen[0] == 0 {
            return Err(TunerError::Space(format!("batch sizes {:?}", self.batch_choices)));
        }
        Ok(())
    }

    /// Position of `lr` on the log axis, 0 at the lower bound and 1 at the
    /// upper.
    pub fn unit_lr(&self, lr: f64) -> f64 {
        let (lo, hi) = self.lr_range;
        (lr.ln() - lo.ln()) / (hi.ln() - lo.ln())
    }

    pub fn lr_at(&self, u: f64) -> f64 {
        let (lo, hi) = self.lr_range;
        (lo.ln() + u.clamp(0.0, 1.0) * (hi.ln() - lo.ln())).exp().clamp(lo, hi)
    }

    pub fn contains(&self, hp: &HyperParams) -> bool {
        let (lo, hi) = self.lr_range;
        hp.learning_rate >= lo && hp.learning_rate <= hi && self.batch_choices.contains(&hp.batch_size)
    }

    pub fn batch_index(&self, batch: usize) -> Option<usize> {
        self.batch_choices.iter().position(|&b| b == batch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Completed,
    Diverged,
}

/// One evaluated hyperparameter setting. `validation_mae` is `None` only for
/// diverged trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub hp: HyperParams,
    pub validation_mae: Option<f64>,
    /// Not serialized, so logs of identical runs compare byte-wise.
    #[serde(skip)]
    pub train_seconds: f64,
    pub status: TrialStatus,
}

impl Trial {
    pub fn completed(index: usize, hp: HyperParams, validation_mae: f64, train_seconds: f64) -> Self {
        Self {
            index,
            hp,
            validation_mae: Some(validation_mae),
            train_seconds,
            status: TrialStatus::Completed,
        }
    }

    pub fn diverged(index: usize, hp: HyperParams, train_seconds: f64) -> Self {
        Self {
            index,
            hp,
            validation_mae: None,
            train_seconds,
            status: TrialStatus::Diverged,
        }
    }

    /// Finite score of a completed trial.
    pub fn score(&self) -> Option<f64> {
        match self.status {
            TrialStatus::Completed => self.validation_mae.filter(|v| v.is_finite()),
            TrialStatus::Diverged => None,
        }
    }
}

/// Index into `trials` of the completed trial with the lowest score; ties go
/// to the earlier trial.
pub fn best_trial(trials: &[Trial]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, t) in trials.iter().enumerate() {
        if let Some(s) = t.score() {
            if best.is_none_or(|(_, b)| s < b) {
                best = Some((i, s));
            }
        }
    }
    best.map(|b| b.0)
}
