use pkde_core::rng::{purpose, stream};
use pkde_nn::HyperParams;
use rand::Rng;

use crate::gp::{expected_improvement, Gp};
use crate::space::{SearchSpace, Trial};

/// Suggestions before the surrogate takes over.
pub const WARMUP: usize = 10;

const GOLDEN_FRACTION: f64 = 0.618_033_988_749_894_8;
const UNIFORM_CANDIDATES: usize = 256;
const LOCAL_CANDIDATES: usize = 24;
const LOCAL_RADIUS: f64 = 0.05;

fn features(space: &SearchSpace, hp: &HyperParams) -> Vec<f64> {
    let mut x = vec![0.0; 1 + space.batch_choices.len()];
    x[0] = space.unit_lr(hp.learning_rate);
    if let Some(b) = space.batch_index(hp.batch_size) {
        x[1 + b] = 1.0;
    }
    x
}

fn make(space: &SearchSpace, u: f64, batch: usize, epochs: usize) -> HyperParams {
    HyperParams {
        learning_rate: space.lr_at(u),
        batch_size: batch,
        epochs,
    }
}

fn taken(hp: &HyperParams, history: &[Trial], pending: &[HyperParams]) -> bool {
    history.iter().map(|t| &t.hp).chain(pending).any(|h| h.learning_rate == hp.learning_rate && h.batch_size == hp.batch_size)
}

/// Point `n` of the seeded quasi-random warmup: golden-ratio steps along the
/// log learning rate, batch sizes in turn.
fn quasi_random(space: &SearchSpace, seed: u64, n: usize, epochs: usize) -> HyperParams {
    let offset: f64 = stream(seed, &[purpose::TUNER, 0]).random();
    let u = (offset + n as f64 * GOLDEN_FRACTION).fract();
    make(space, u, space.batch_choices[n % space.batch_choices.len()], epochs)
}

/// Next setting to evaluate given finished trials. Deterministic in
/// `(history, seed)`.
pub fn suggest(history: &[Trial], space: &SearchSpace, seed: u64) -> HyperParams {
    suggest_pending(history, &[], space, seed)
}

/// Like [`suggest`], treating `pending` settings as already observed at the
/// best score so far (the constant liar).
pub fn suggest_pending(history: &[Trial], pending: &[HyperParams], space: &SearchSpace, seed: u64) -> HyperParams {
    let n = history.len() + pending.len();
    let epochs = history.first().map_or(HyperParams::default().epochs, |t| t.hp.epochs);
    let scores: Vec<f64> = history.iter().filter_map(Trial::score).collect();
    let surrogate = if n >= WARMUP && scores.len() >= 2 { surrogate_pick(history, pending, space, seed, epochs) } else { None };
    if let Some(hp) = surrogate {
        return hp;
    }
    // warmup, or fallback when the surrogate cannot be fit
    let mut k = n;
    loop {
        let hp = quasi_random(space, seed, k, epochs);
        if !taken(&hp, history, pending) {
            return hp;
        }
        k += 1;
    }
}

fn surrogate_pick(history: &[Trial], pending: &[HyperParams], space: &SearchSpace, seed: u64, epochs: usize) -> Option<HyperParams> {
    let scores: Vec<f64> = history.iter().filter_map(Trial::score).collect();
    let best = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let worst = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for t in history {
        xs.push(features(space, &t.hp));
        // a diverged setting counts as the worst seen
        ys.push(t.score().unwrap_or(worst));
    }
    for hp in pending {
        xs.push(features(space, hp));
        ys.push(best);
    }
    let gp = Gp::fit(&xs, &ys)?;

    let n = history.len() + pending.len();
    let mut rng = stream(seed, &[purpose::TUNER, 1, n as u64]);
    let mut ranked: Vec<&Trial> = history.iter().filter(|t| t.score().is_some()).collect();
    ranked.sort_by(|a, b| a.score().partial_cmp(&b.score()).expect("finite scores"));
    let mut candidates: Vec<(f64, usize)> = Vec::new();
    for b in 0..space.batch_choices.len() {
        for _ in 0..UNIFORM_CANDIDATES {
            candidates.push((rng.random(), b));
        }
    }
    for t in ranked.iter().take(3) {
        let u0 = space.unit_lr(t.hp.learning_rate);
        for b in 0..space.batch_choices.len() {
            for _ in 0..LOCAL_CANDIDATES {
                let u = (u0 + rng.random_range(-LOCAL_RADIUS..LOCAL_RADIUS)).clamp(0.0, 1.0);
                candidates.push((u, b));
            }
        }
    }

    let mut pick: Option<(HyperParams, f64)> = None;
    for (u, b) in candidates {
        let hp = make(space, u, space.batch_choices[b], epochs);
        if taken(&hp, history, pending) {
            continue;
        }
        let (mean, sd) = gp.predict(&features(space, &hp));
        let ei = expected_improvement(mean, sd, best, 0.0);
        if pick.as_ref().is_none_or(|p| ei > p.1) {
            pick = Some((hp, ei));
        }
    }
    pick.map(|p| p.0)
}

/// Uniform random setting for trial `index`, the baseline search mode.
pub fn random_suggestion(space: &SearchSpace, seed: u64, index: usize, epochs: usize) -> HyperParams {
    let mut rng = stream(seed, &[purpose::TUNER, 2, index as u64]);
    let u: f64 = rng.random();
    let b = rng.random_range(0..space.batch_choices.len());
    make(space, u, space.batch_choices[b], epochs)
}
