use pkde_core::energy_density;
use pkde_core::rng::{purpose, stream};
use pkde_core::{LayerImage, PorePosition, PoreSet, ProcessParams};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::SynthError;

/// Stochastic pore surrogate.
///
/// The expected count per layer is `base_rate · g(E_v)` with
/// `g(E) = 1 + energy_sensitivity · ln(E / nominal_energy_density)²`.
/// `g` is 1 at the nominal energy density and rises on both sides: too
/// little energy leaves lack-of-fusion voids, too much produces keyholes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoreModel {
    pub base_rate: f64,
    pub energy_sensitivity: f64,
    /// J/m³.
    pub nominal_energy_density: f64,
    pub seed: u64,
}

impl PoreModel {
    pub fn new(base_rate: f64, energy_sensitivity: f64, seed: u64) -> Self {
        Self {
            base_rate,
            energy_sensitivity,
            nominal_energy_density: 60e9,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.base_rate) || !ok(self.energy_sensitivity) {
            return Err(SynthError::Config(format!(
                "pore rate parameters must be finite and non-negative (base_rate {}, energy_sensitivity {})",
                self.base_rate, self.energy_sensitivity
            )));
        }
        if !(self.nominal_energy_density.is_finite() && self.nominal_energy_density > 0.0) {
            return Err(SynthError::Config(format!(
                "nominal energy density must be positive, got {}",
                self.nominal_energy_density
            )));
        }
        Ok(())
    }
}

/// Expected pores per layer for `params`.
pub fn pore_rate(model: &PoreModel, params: &ProcessParams) -> Result<f64, SynthError> {
    model.validate()?;
    let e = energy_density(params)?;
    let dev = (e / model.nominal_energy_density).ln();
    Ok(model.base_rate * (1.0 + model.energy_sensitivity * dev * dev))
}

/// Pixels whose Chebyshev neighborhood of radius `r` is all material.
pub(crate) fn eroded_pixels(mask: &LayerImage, r: usize) -> Vec<(usize, usize)> {
    let (w, h) = mask.dims();
    let solid = |x: usize, y: usize| mask.get(x, y) > 0.5;
    let mut out = Vec::new();
    for y in r..h.saturating_sub(r) {
        for x in r..w.saturating_sub(r) {
            if (y - r..=y + r).all(|yy| (x - r..=x + r).all(|xx| solid(xx, yy))) {
                out.push((x, y));
            }
        }
    }
    out
}

/// Seeds the pores of one layer.
///
/// The count is Poisson with mean [`pore_rate`]. Each pore picks a material
/// pixel uniformly among those at least `clearance` pixels away from powder
/// (falling back to all material pixels when the eroded mask is empty) and
/// a uniform sub-pixel offset, so it lies inside the mask. The result
/// depends only on `(model.seed, part, layer)`.
pub fn seed_pores(
    mask: &LayerImage,
    params: &ProcessParams,
    model: &PoreModel,
    layer: u32,
    clearance: usize,
) -> Result<PoreSet, SynthError> {
    let part = params.part;
    let lambda = pore_rate(model, params)?;
    let mut candidates = eroded_pixels(mask, clearance);
    if candidates.is_empty() {
        candidates = eroded_pixels(mask, 0);
    }
    if candidates.is_empty() {
        return Err(SynthError::EmptyMask { part, layer });
    }
    if lambda == 0.0 {
        return Ok(PoreSet::empty(part, layer));
    }
    let keys = [u64::from(part), u64::from(layer)];
    let mut count_rng = stream(model.seed, &[purpose::PORE_COUNT, keys[0], keys[1]]);
    let n = Poisson::new(lambda)
        .map_err(|e| SynthError::Config(format!("pore rate {lambda}: {e}")))?
        .sample(&mut count_rng) as usize;
    let mut pos_rng = stream(model.seed, &[purpose::PORE_POSITION, keys[0], keys[1]]);
    let pores = (0..n)
        .map(|_| {
            let (x, y) = candidates[pos_rng.random_range(0..candidates.len())];
            let dx: f64 = pos_rng.random_range(-0.5..0.5);
            let dy: f64 = pos_rng.random_range(-0.5..0.5);
            PorePosition::new(x as f64 + dx, y as f64 + dy)
        })
        .collect();
    Ok(PoreSet::new(part, layer, pores))
}
