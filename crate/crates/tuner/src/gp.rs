//! Gaussian-process surrogate with a Matérn-5/2 kernel.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Kernel length scales for the log-lr axis and the one-hot batch axes, and
/// the observation noise, all in standardized units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    pub lr_scale: f64,
    pub batch_scale: f64,
    pub noise: f64,
}

const LR_SCALES: [f64; 6] = [0.05, 0.1, 0.2, 0.3, 0.5, 1.0];
const BATCH_SCALES: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
const NOISES: [f64; 3] = [1e-6, 1e-3, 1e-1];

fn matern52(r: f64) -> f64 {
    let s = 5f64.sqrt() * r;
    (1.0 + s + s * s / 3.0) * (-s).exp()
}

impl Kernel {
    /// Inputs are `[u, onehot...]` with `u` the unit log learning rate.
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let du = (a[0] - b[0]) / self.lr_scale;
        let db: f64 = a[1..].iter().zip(&b[1..]).map(|(x, y)| (x - y) * (x - y)).sum();
        matern52((du * du + db / (self.batch_scale * self.batch_scale)).sqrt())
    }
}

/// Posterior of a zero-mean unit-variance GP on standardized targets.
pub struct Gp {
    kernel: Kernel,
    xs: Vec<Vec<f64>>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    mean: f64,
    scale: f64,
}

impl Gp {
    fn gram(kernel: &Kernel, xs: &[Vec<f64>]) -> DMatrix<f64> {
        let n = xs.len();
        DMatrix::from_fn(n, n, |i, j| kernel.eval(&xs[i], &xs[j]) + if i == j { kernel.noise } else { 0.0 })
    }

    /// Conditions on `(xs, ys)` with a fixed kernel. `None` when the Gram
    /// matrix is not numerically positive definite.
    pub fn fit_with(kernel: Kernel, xs: &[Vec<f64>], ys: &[f64]) -> Option<(Self, f64)> {
        let n = ys.len();
        if n == 0 {
            return None;
        }
        let mean = ys.iter().sum::<f64>() / n as f64;
        let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n as f64;
        let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
        let y = DVector::from_iterator(n, ys.iter().map(|v| (v - mean) / scale));
        let chol = Cholesky::new(Self::gram(&kernel, xs))?;
        let alpha = chol.solve(&y);
        let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
        let lml = -0.5 * y.dot(&alpha) - log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
        Some((
            Self {
                kernel,
                xs: xs.to_vec(),
                chol,
                alpha,
                mean,
                scale,
            },
            lml,
        ))
    }

    /// Picks the kernel with the highest marginal likelihood on a fixed grid.
    pub fn fit(xs: &[Vec<f64>], ys: &[f64]) -> Option<Self> {
        let mut best: Option<(Self, f64)> = None;
        for &lr_scale in &LR_SCALES {
            for &batch_scale in &BATCH_SCALES {
                for &noise in &NOISES {
                    let k = Kernel {
                        lr_scale,
                        batch_scale,
                        noise,
                    };
                    if let Some((gp, lml)) = Self::fit_with(k, xs, ys) {
                        if best.as_ref().is_none_or(|b| lml > b.1) {
                            best = Some((gp, lml));
                        }
                    }
                }
            }
        }
        best.map(|b| b.0)
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    /// Posterior mean and standard deviation in the original units.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let k = DVector::from_iterator(self.xs.len(), self.xs.iter().map(|xi| self.kernel.eval(xi, x)));
        let mu = k.dot(&self.alpha);
        let v = self.chol.l().solve_lower_triangular(&k).expect("triangular factor is invertible");
        let var = (1.0 - v.dot(&v)).max(0.0);
        (self.mean + self.scale * mu, self.scale * var.sqrt())
    }
}

fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Expected improvement below `best` for a minimization problem.
pub fn expected_improvement(mean: f64, sd: f64, best: f64, xi: f64) -> f64 {
    let gain = best - mean - xi;
    if sd <= 0.0 {
        return gain.max(0.0);
    }
    let z = gain / sd;
    gain * norm_cdf(z) + sd * norm_pdf(z)
}
