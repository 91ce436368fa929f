use std::time::Instant;

use pkde_core::rng::{purpose, stream};
use pkde_core::{Dataset, LayerImage, LayerKey, LayerTriplet, Modality, SplitAssignment};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::NnError;
use crate::layers::{mae, Act};
use crate::model::{Gradients, ModelConfig, Network};
use crate::weights::Weights;

pub const LR_RANGE: (f64, f64) = (1e-6, 1e-3);
pub const BATCH_CHOICES: [usize; 3] = [16, 32, 64];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl HyperParams {
    /// Learning rate within `[1e-6, 1e-3]`, batch size one of 16, 32, 64.
    pub fn new(learning_rate: f64, batch_size: usize, epochs: usize) -> Result<Self, NnError> {
        let hp = Self {
            learning_rate,
            batch_size,
            epochs,
        };
        hp.validate()?;
        Ok(hp)
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if !(self.learning_rate >= LR_RANGE.0 && self.learning_rate <= LR_RANGE.1) {
            return Err(NnError::Config(format!(
                "learning rate {} outside [{}, {}]",
                self.learning_rate, LR_RANGE.0, LR_RANGE.1
            )));
        }
        if !BATCH_CHOICES.contains(&self.batch_size) {
            return Err(NnError::Config(format!("batch size {} not in {BATCH_CHOICES:?}", self.batch_size)));
        }
        Ok(())
    }
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 16,
            epochs: 60,
        }
    }
}

/// Network input and label of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub key: LayerKey,
    /// `[2, h, w]`: HR then OT.
    pub input: Act<f32>,
    /// `[1, h, w]`; empty for prediction-only samples.
    pub target: Act<f32>,
}

impl Sample {
    pub fn from_triplet(t: &LayerTriplet) -> Self {
        let (w, h) = t.dims();
        let mut input = t.hr.data().to_vec();
        input.extend_from_slice(t.ot.data());
        Self {
            key: t.key(),
            input: Act::new(2, h, w, input),
            target: Act::new(1, h, w, t.pp.data().to_vec()),
        }
    }

    /// Prediction-only sample without a label.
    pub fn unlabeled(key: LayerKey, hr: &LayerImage, ot: &LayerImage) -> Result<Self, NnError> {
        if hr.dims() != ot.dims() {
            return Err(NnError::Shape {
                layer: "input".into(),
                message: format!("HR {:?} vs OT {:?}", hr.dims(), ot.dims()),
            });
        }
        let (w, h) = hr.dims();
        let mut input = hr.data().to_vec();
        input.extend_from_slice(ot.data());
        Ok(Self {
            key,
            input: Act::new(2, h, w, input),
            target: Act::new(0, h, w, Vec::new()),
        })
    }
}

/// Samples for `keys` in the given order.
pub fn samples_for<'a>(dataset: &Dataset, keys: impl IntoIterator<Item = &'a LayerKey>) -> Result<Vec<Sample>, NnError> {
    keys.into_iter()
        .map(|k| {
            dataset
                .get(*k)
                .map(Sample::from_triplet)
                .ok_or_else(|| NnError::Data(format!("split references missing triplet {k:?}")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean per-sample loss seen during the epoch's updates.
    pub train_mae: f64,
    pub validation_mae: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub seed: u64,
    pub hyperparams: HyperParams,
    pub config: ModelConfig,
    pub parameter_count: usize,
    pub train_samples: usize,
    pub validation_samples: usize,
    /// MAE of predicting zero everywhere on the validation set.
    pub baseline_validation_mae: Option<f64>,
    pub initial_validation_mae: Option<f64>,
    pub epochs: Vec<EpochLog>,
    /// Epoch whose weights were returned; 0 means the initial weights.
    pub best_epoch: usize,
    pub best_validation_mae: Option<f64>,
    /// Kept out of the serialized report so reports compare byte-wise.
    #[serde(skip)]
    pub wall_seconds: f64,
}

/// Per-sample MAE of the network on labeled samples.
pub fn evaluate(weights: &Weights, samples: &[Sample]) -> Result<Vec<f64>, NnError> {
    samples
        .par_iter()
        .map(|s| {
            let tape = weights.net.forward_sample(&s.input)?;
            Ok(mae(&tape.output().data, &s.target.data).0)
        })
        .collect()
}

/// MAE of the all-zero prediction, per sample.
pub fn zero_baseline(samples: &[Sample]) -> Vec<f64> {
    samples
        .iter()
        .map(|s| s.target.data.iter().map(|&v| f64::from(v.abs())).sum::<f64>() / s.target.data.len() as f64)
        .collect()
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Per-channel mean and standard deviation of the training inputs.
fn input_normalization(train: &[Sample], channels: usize) -> (Vec<f32>, Vec<f32>) {
    let mut shift = vec![0.0f32; channels];
    let mut scale = vec![1.0f32; channels];
    for c in 0..channels {
        let (mut n, mut s, mut s2) = (0.0f64, 0.0f64, 0.0f64);
        for smp in train {
            let hw = smp.input.plane();
            for &v in &smp.input.data[c * hw..(c + 1) * hw] {
                let v = f64::from(v);
                n += 1.0;
                s += v;
                s2 += v * v;
            }
        }
        if n > 0.0 {
            let m = s / n;
            let sd = (s2 / n - m * m).max(0.0).sqrt();
            shift[c] = m as f32;
            scale[c] = if sd > 1e-6 { sd as f32 } else { 1.0 };
        }
    }
    (shift, scale)
}

fn check_samples(config: &ModelConfig, samples: &[Sample], what: &str) -> Result<(), NnError> {
    let Some(first) = samples.first() else {
        return Ok(());
    };
    for s in samples {
        if s.input.shape() != first.input.shape() || s.target.shape() != [1, first.input.h, first.input.w] {
            return Err(NnError::Data(format!(
                "{what} sample {:?} has shape {:?}/{:?}, expected {:?}",
                s.key,
                s.input.shape(),
                s.target.shape(),
                first.input.shape()
            )));
        }
    }
    if first.input.c != config.in_channels {
        return Err(NnError::Shape {
            layer: "enc0.conv1".into(),
            message: format!("expected {} input channels, got {}", config.in_channels, first.input.c),
        });
    }
    config.check_extent(first.input.h, first.input.w)
}

/// Trains a fresh network on `train`, selecting the epoch with the lowest
/// validation MAE (lowest training MAE when `validation` is empty).
pub fn train_samples(
    train: &[Sample],
    validation: &[Sample],
    config: ModelConfig,
    hp: &HyperParams,
    seed: u64,
) -> Result<(Weights, TrainReport), NnError> {
    let started = Instant::now();
    hp.validate()?;
    config.validate()?;
    if train.is_empty() {
        return Err(NnError::Data("no training samples".into()));
    }
    check_samples(&config, train, "training")?;
    check_samples(&config, validation, "validation")?;

    let mut net = Network::<f32>::init(config, seed)?;
    let (shift, scale) = input_normalization(train, config.in_channels);
    net.input_shift = shift;
    net.input_scale = scale;
    let mut weights = Weights::from_network(net);

    let initial_val = mean(&evaluate(&weights, validation)?);
    let mut report = TrainReport {
        seed,
        hyperparams: *hp,
        config,
        parameter_count: weights.net.parameter_count(),
        train_samples: train.len(),
        validation_samples: validation.len(),
        baseline_validation_mae: mean(&zero_baseline(validation)),
        initial_validation_mae: initial_val,
        epochs: Vec::new(),
        best_epoch: 0,
        best_validation_mae: initial_val,
        wall_seconds: 0.0,
    };
    let mut best = weights.clone();
    let mut best_score = initial_val.unwrap_or(f64::INFINITY);

    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=hp.epochs {
        let mut rng = stream(seed, &[purpose::SHUFFLE, epoch as u64]);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (bi, chunk) in order.chunks(hp.batch_size).enumerate() {
            let scale = 1.0 / chunk.len() as f32;
            let per: Vec<(f64, Gradients<f32>)> = chunk
                .par_iter()
                .map(|&i| {
                    let s = &train[i];
                    let tape = weights.net.forward_sample(&s.input)?;
                    let (loss, mut g) = mae(&tape.output().data, &s.target.data);
                    for v in &mut g {
                        *v *= scale;
                    }
                    let up = Act::new(1, s.input.h, s.input.w, g);
                    Ok((loss, weights.net.backward_sample(&tape, &up)?))
                })
                .collect::<Result<_, NnError>>()?;
            let batch_loss: f64 = per.iter().map(|p| p.0).sum();
            if !batch_loss.is_finite() {
                return Err(NnError::Diverged {
                    epoch,
                    batch: bi,
                    loss: batch_loss / chunk.len() as f64,
                });
            }
            loss_sum += batch_loss;
            let mut total = Gradients::zeros(&weights.net);
            for (_, g) in &per {
                total.add_assign(g);
            }
            weights.adam_step(&total, hp.learning_rate);
        }
        let train_mae = loss_sum / train.len() as f64;
        let val = mean(&evaluate(&weights, validation)?);
        log::debug!("epoch {epoch}: train {train_mae:.5} validation {val:?}");
        let score = val.unwrap_or(train_mae);
        if score < best_score {
            best_score = score;
            best = weights.clone();
            report.best_epoch = epoch;
            report.best_validation_mae = val;
        }
        report.epochs.push(EpochLog {
            epoch,
            train_mae,
            validation_mae: val,
        });
    }
    report.wall_seconds = started.elapsed().as_secs_f64();
    Ok((best, report))
}

/// Trains on the dataset's train split and selects on its validation split.
pub fn train(
    dataset: &Dataset,
    split: &SplitAssignment,
    config: ModelConfig,
    hp: &HyperParams,
    seed: u64,
) -> Result<(Weights, TrainReport), NnError> {
    let tr = samples_for(dataset, &split.train)?;
    let va = samples_for(dataset, &split.validation)?;
    train_samples(&tr, &va, config, hp, seed)
}

/// Predicted pore-probability image with its layer key.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub part: u32,
    pub layer: u32,
    pub image: LayerImage,
}

/// Predictions for each sample, in input order. Samples are independent,
/// so batching does not change any value.
pub fn predict_samples(weights: &Weights, samples: &[Sample]) -> Result<Vec<Prediction>, NnError> {
    samples
        .par_iter()
        .map(|s| {
            let tape = weights.net.forward_sample(&s.input)?;
            let out = tape.output();
            Ok(Prediction {
                part: s.key.0,
                layer: s.key.1,
                image: LayerImage::new(Modality::Pp, out.w, out.h, out.data.clone())?,
            })
        })
        .collect()
}

pub fn predict_batch(weights: &Weights, triplets: &[LayerTriplet]) -> Result<Vec<Prediction>, NnError> {
    let samples: Vec<Sample> = triplets.iter().map(Sample::from_triplet).collect();
    predict_samples(weights, &samples)
}
