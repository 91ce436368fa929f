//! Analytic stand-ins for validation MAE, for testing the search without
//! training networks.

use pkde_nn::HyperParams;

use crate::space::SearchSpace;

/// Smooth bowl in log learning rate with its minimum near `lr = 6.3e-5`,
/// a mild ripple, and a penalty for larger batches.
pub fn analytic_objective(hp: &HyperParams) -> f64 {
    let x = hp.learning_rate.log10();
    let batch = match hp.batch_size {
        16 => 0.0,
        32 => 0.004,
        _ => 0.012,
    };
    0.05 + 0.02 * (x + 4.2).powi(2) + 0.003 * (3.0 * x).sin() + batch
}

/// Narrow well of width 0.15 decades centered on `lr = 1e-4`.
pub fn sharp_objective(hp: &HyperParams) -> f64 {
    let x = hp.learning_rate.log10();
    let batch = if hp.batch_size == 16 { 0.0 } else { 0.05 };
    1.0 - (-(x + 4.0).powi(2) / (2.0 * 0.15 * 0.15)).exp() + batch
}

/// `n` settings with log-spaced learning rates, batch sizes in turn.
pub fn reference_grid(space: &SearchSpace, n: usize, epochs: usize) -> Vec<HyperParams> {
    (0..n)
        .map(|i| HyperParams {
            learning_rate: space.lr_at(i as f64 / (n - 1).max(1) as f64),
            batch_size: space.batch_choices[i % space.batch_choices.len()],
            epochs,
        })
        .collect()
}

/// Objective value at the given quantile of the reference grid, e.g. 0.05
/// for the top five percent.
pub fn grid_quantile(space: &SearchSpace, n: usize, quantile: f64, objective: impl Fn(&HyperParams) -> f64) -> f64 {
    let mut v: Vec<f64> = reference_grid(space, n, 1).iter().map(objective).collect();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite objective"));
    let k = ((quantile * n as f64).ceil() as usize).clamp(1, n);
    v[k - 1]
}
