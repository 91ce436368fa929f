use pkde_core::rng::{purpose, stream};
use pkde_core::{energy_density, LayerImage, Modality, PoreSet, ProcessParams};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::SynthError;

/// Rendering knobs. Signature amplitudes of zero give the no-signal regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    /// Standard deviation of the HR speckle.
    pub hr_noise: f64,
    /// Standard deviation of the OT noise.
    pub ot_noise: f64,
    /// Depth of the dark HR spot at a pore.
    pub hr_signature: f64,
    /// Height of the hot OT spot at a pore.
    pub ot_signature: f64,
    /// Gaussian radius of both signatures in pixels.
    pub signature_sigma: f64,
    /// Energy density at which OT brightness is one half, J/m³.
    pub ot_reference_energy: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            hr_noise: 0.05,
            ot_noise: 0.02,
            hr_signature: 0.1,
            ot_signature: 0.8,
            signature_sigma: 1.5,
            ot_reference_energy: 60e9,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let vals = [
            ("hr_noise", self.hr_noise),
            ("ot_noise", self.ot_noise),
            ("hr_signature", self.hr_signature),
            ("ot_signature", self.ot_signature),
        ];
        for (name, v) in vals {
            if !v.is_finite() || v < 0.0 {
                return Err(SynthError::Config(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if !(self.signature_sigma.is_finite() && self.signature_sigma > 0.0) {
            return Err(SynthError::Config(format!("signature_sigma must be positive, got {}", self.signature_sigma)));
        }
        if !(self.ot_reference_energy.is_finite() && self.ot_reference_energy > 0.0) {
            return Err(SynthError::Config(format!(
                "ot_reference_energy must be positive, got {}",
                self.ot_reference_energy
            )));
        }
        Ok(())
    }

    /// Signatures vanish beyond this distance.
    pub fn signature_radius(&self) -> f64 {
        3.0 * self.signature_sigma
    }
}

/// OT brightness factor `E / (E + E_ref)`, strictly increasing in `E`.
pub fn ot_brightness(cfg: &RenderConfig, params: &ProcessParams) -> Result<f64, SynthError> {
    let e = energy_density(params)?;
    Ok(e / (e + cfg.ot_reference_energy))
}

/// Scan-stripe texture on material, flat powder elsewhere. The hatch
/// direction rotates by 67 degrees per layer.
fn hr_texture(mask: &LayerImage, layer: u32) -> Vec<f64> {
    let (w, h) = mask.dims();
    let theta = (67.0 * f64::from(layer.saturating_sub(1) % 360)).to_radians();
    let (c, s) = (theta.cos(), theta.sin());
    let period = 4.0;
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            out.push(if mask.get(x, y) > 0.5 {
                let phase = (x as f64 * c + y as f64 * s) / period;
                0.55 + 0.1 * (0.5 + 0.5 * (std::f64::consts::TAU * phase).cos())
            } else {
                0.3
            });
        }
    }
    out
}

/// 3×3 box filter with edge clamping.
fn smoothed(mask: &LayerImage) -> Vec<f64> {
    let (w, h) = mask.dims();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let xx = (x as i64 + dx).clamp(0, w as i64 - 1) as usize;
                    let yy = (y as i64 + dy).clamp(0, h as i64 - 1) as usize;
                    acc += f64::from(mask.get(xx, yy));
                }
            }
            out.push(acc / 9.0);
        }
    }
    out
}

/// Adds `amplitude · exp(-d² / 2σ²)` around every pore, truncated at 3σ.
fn add_signature(img: &mut [f64], w: usize, h: usize, pores: &PoreSet, amplitude: f64, sigma: f64) {
    if amplitude == 0.0 {
        return;
    }
    let r = 3.0 * sigma;
    for p in &pores.pores {
        let x_lo = (p.x - r).ceil().max(0.0) as usize;
        let y_lo = (p.y - r).ceil().max(0.0) as usize;
        let x_hi = ((p.x + r).floor() as i64).min(w as i64 - 1);
        let y_hi = ((p.y + r).floor() as i64).min(h as i64 - 1);
        if x_hi < 0 || y_hi < 0 {
            continue;
        }
        for y in y_lo..=y_hi as usize {
            for x in x_lo..=x_hi as usize {
                let d2 = (x as f64 - p.x).powi(2) + (y as f64 - p.y).powi(2);
                if d2 <= r * r {
                    img[y * w + x] += amplitude * (-d2 / (2.0 * sigma * sigma)).exp();
                }
            }
        }
    }
}

fn add_noise(img: &mut [f64], sd: f64, seed: u64, keys: &[u64]) {
    if sd == 0.0 {
        return;
    }
    let normal = Normal::new(0.0, sd).expect("validated standard deviation");
    let mut rng = stream(seed, keys);
    for v in img.iter_mut() {
        *v += normal.sample(&mut rng);
    }
}

fn to_image(modality: Modality, w: usize, h: usize, data: Vec<f64>) -> Result<LayerImage, SynthError> {
    Ok(LayerImage::new(modality, w, h, data.into_iter().map(|v| v as f32).collect())?)
}

/// Renders the HR and OT images of one layer.
///
/// HR: scan-stripe texture on material, a faint dark spot at each pore and
/// speckle noise. OT: the 3×3-smoothed mask times [`ot_brightness`], a hot
/// spot at each pore and noise. Noise streams are keyed on
/// `(noise_seed, part, layer)`.
pub fn render_modalities(
    mask: &LayerImage,
    pores: &PoreSet,
    params: &ProcessParams,
    cfg: &RenderConfig,
    noise_seed: u64,
) -> Result<(LayerImage, LayerImage), SynthError> {
    cfg.validate()?;
    let (w, h) = mask.dims();
    let (part, layer) = (u64::from(pores.part), u64::from(pores.layer));

    let mut hr = hr_texture(mask, pores.layer);
    add_signature(&mut hr, w, h, pores, -cfg.hr_signature, cfg.signature_sigma);
    add_noise(&mut hr, cfg.hr_noise, noise_seed, &[purpose::HR_NOISE, part, layer]);

    let b = ot_brightness(cfg, params)?;
    let mut ot: Vec<f64> = smoothed(mask).into_iter().map(|v| v * b).collect();
    add_signature(&mut ot, w, h, pores, cfg.ot_signature, cfg.signature_sigma);
    add_noise(&mut ot, cfg.ot_noise, noise_seed, &[purpose::OT_NOISE, part, layer]);

    Ok((to_image(Modality::Hr, w, h, hr)?, to_image(Modality::Ot, w, h, ot)?))
}
