//! Pore-probability labels from pore positions.
//!
//! Each layer's pore positions `v_1..v_Q` are smoothed into a density
//!
//! ```text
//! KDE(v) = 1/(β Q) · Σ_i N((v − v_i) / β)
//! ```
//!
//! with `N` the standard bivariate Gaussian density, sampled at pixel
//! coordinates, and then min-max normalized per layer into `[0, 1]`.
//!
//! The prefactor is `1/(βQ)` rather than the textbook `1/(β²Q)`. Min-max
//! normalization cancels any constant factor, so the label is the same
//! either way; only [`kde_raw`] exposes the difference.

use std::f64::consts::PI;

use pkde_core::{LayerImage, Modality, PorePosition, PoreSet};
use thiserror::Error;

pub const DEFAULT_BANDWIDTH: f64 = 20.0;

/// Default truncation radius in bandwidths. At `6β` the kernel has fallen
/// to `exp(-18) ≈ 1.5e-8` of its peak.
pub const DEFAULT_TRUNCATION: f64 = 6.0;

/// Smallest truncation radius accepted, in bandwidths.
pub const MIN_TRUNCATION: f64 = 4.0;

#[derive(Debug, Error, PartialEq)]
pub enum LabelError {
    #[error("bandwidth must be finite and positive, got {0}")]
    Bandwidth(f64),
    #[error("truncation radius {radius} is below {MIN_TRUNCATION} x bandwidth {bandwidth}")]
    Truncation { radius: f64, bandwidth: f64 },
    #[error("kernel density needs at least one pore")]
    EmptyPoreSet,
    #[error("pore ({x}, {y}) lies outside the {width}x{height} frame")]
    OutOfFrame { x: f64, y: f64, width: usize, height: usize },
    #[error("image extent {width}x{height} is empty")]
    EmptyImage { width: usize, height: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdeConfig {
    bandwidth: f64,
    truncation_radius: f64,
}

impl KdeConfig {
    pub fn new(bandwidth: f64) -> Result<Self, LabelError> {
        Self::with_truncation(bandwidth, DEFAULT_TRUNCATION * bandwidth)
    }

    pub fn with_truncation(bandwidth: f64, truncation_radius: f64) -> Result<Self, LabelError> {
        if !bandwidth.is_finite() || bandwidth <= 0.0 {
            return Err(LabelError::Bandwidth(bandwidth));
        }
        // infinite radius disables truncation
        if truncation_radius.is_nan() || truncation_radius < MIN_TRUNCATION * bandwidth {
            return Err(LabelError::Truncation {
                radius: truncation_radius,
                bandwidth,
            });
        }
        Ok(Self {
            bandwidth,
            truncation_radius,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn truncation_radius(&self) -> f64 {
        self.truncation_radius
    }
}

impl Default for KdeConfig {
    fn default() -> Self {
        Self::new(DEFAULT_BANDWIDTH).expect("default bandwidth is valid")
    }
}

/// Unnormalized density sampled on the pixel grid, in `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl DensityField {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

fn check_frame(pores: &PoreSet, width: usize, height: usize) -> Result<(), LabelError> {
    if width == 0 || height == 0 {
        return Err(LabelError::EmptyImage { width, height });
    }
    match pores.pores.iter().find(|p| !p.in_frame(width, height)) {
        Some(p) => Err(LabelError::OutOfFrame {
            x: p.x,
            y: p.y,
            width,
            height,
        }),
        None => Ok(()),
    }
}

/// Evaluates the kernel density at every pixel.
///
/// Pores are accumulated in a canonical order (by `x`, then `y`) so that
/// the result does not depend on the order of the input list. Kernel
/// contributions farther than the truncation radius are skipped.
pub fn kde_raw(pores: &PoreSet, width: usize, height: usize, cfg: &KdeConfig) -> Result<DensityField, LabelError> {
    if pores.is_empty() {
        return Err(LabelError::EmptyPoreSet);
    }
    check_frame(pores, width, height)?;

    let mut sorted: Vec<PorePosition> = pores.pores.clone();
    sorted.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));

    let beta = cfg.bandwidth;
    let q = sorted.len() as f64;
    let scale = 1.0 / (beta * q) / (2.0 * PI);
    let inv_two_beta_sq = 1.0 / (2.0 * beta * beta);
    let r = cfg.truncation_radius;
    let r_sq = r * r;

    let mut data = vec![0.0f64; width * height];
    for p in &sorted {
        let x_lo = (p.x - r).ceil().max(0.0) as usize;
        let y_lo = (p.y - r).ceil().max(0.0) as usize;
        let x_hi = ((p.x + r).floor().min((width - 1) as f64)) as usize;
        let y_hi = ((p.y + r).floor().min((height - 1) as f64)) as usize;
        for y in y_lo..=y_hi {
            let dy = y as f64 - p.y;
            let row = &mut data[y * width..(y + 1) * width];
            for (x, cell) in row.iter_mut().enumerate().take(x_hi + 1).skip(x_lo) {
                let dx = x as f64 - p.x;
                let d_sq = dx * dx + dy * dy;
                if d_sq <= r_sq {
                    *cell += scale * (-d_sq * inv_two_beta_sq).exp();
                }
            }
        }
    }
    Ok(DensityField { width, height, data })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelStatus {
    /// No pores: all-zero label.
    Empty,
    /// Regular min-max normalized label.
    Normalized,
    /// Pores present but the density is flat over the frame; all-zero label.
    Degenerate,
}

/// Min-max normalized pore-probability label.
///
/// A layer without pores yields the all-zero image. So does a constant
/// density field, with a warning.
pub fn kde_label(pores: &PoreSet, width: usize, height: usize, cfg: &KdeConfig) -> Result<LayerImage, LabelError> {
    kde_label_with_status(pores, width, height, cfg).map(|(img, _)| img)
}

pub fn kde_label_with_status(
    pores: &PoreSet,
    width: usize,
    height: usize,
    cfg: &KdeConfig,
) -> Result<(LayerImage, LabelStatus), LabelError> {
    if width == 0 || height == 0 {
        return Err(LabelError::EmptyImage { width, height });
    }
    if pores.is_empty() {
        return Ok((LayerImage::zeros(Modality::Pp, width, height), LabelStatus::Empty));
    }
    let field = kde_raw(pores, width, height, cfg)?;
    let (lo, hi) = field.min_max();
    if hi <= lo {
        log::warn!(
            "degenerate pore density for part {} layer {}: constant field over {width}x{height}",
            pores.part,
            pores.layer
        );
        return Ok((LayerImage::zeros(Modality::Pp, width, height), LabelStatus::Degenerate));
    }
    let span = hi - lo;
    let data: Vec<f32> = field.data.iter().map(|&v| ((v - lo) / span) as f32).collect();
    let img = LayerImage::new(Modality::Pp, width, height, data).expect("normalized values lie in [0, 1]");
    Ok((img, LabelStatus::Normalized))
}
