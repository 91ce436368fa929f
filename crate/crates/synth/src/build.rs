use std::path::Path;

use pkde_core::format::write_image;
use pkde_core::manifest::{Manifest, PartEntry, TripletEntry, VolumeEntry, MANIFEST_FILE};
use pkde_core::rng::{purpose, stream};
use pkde_core::{CoreError, LayerImage, PoreSet};
use pkde_xct::{rotate_to_build_axis, Rotation, VoxelVolume};
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SynthError;
use crate::geometry::{cross_section, GeometrySpec};
use crate::plan::{BuildPlan, PlanEntry};
use crate::pores::{seed_pores, PoreModel};
use crate::render::{render_modalities, RenderConfig};

/// How the CT-like volume is laid out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeConfig {
    /// Voxel planes per build layer; the voxel edge is `layer_thickness / k`.
    pub voxels_per_layer: usize,
    /// Air border around the part in x and y, in voxels.
    pub margin: usize,
    /// Pores are `(2 h + 1)²` voxel squares in the middle plane of their layer.
    pub pore_half_width: usize,
    pub material_intensity: f32,
    pub void_intensity: f32,
    /// Standard deviation of Gaussian intensity noise.
    pub noise: f32,
    /// Orientation the volume is stored in, relative to build orientation.
    pub scan_rotation: String,
}

impl Default for VolumeConfig {
    fn default() -> Self {
        Self {
            voxels_per_layer: 3,
            margin: 4,
            pore_half_width: 1,
            material_intensity: 20000.0,
            void_intensity: 2000.0,
            noise: 500.0,
            scan_rotation: "x90".into(),
        }
    }
}

impl VolumeConfig {
    /// Pixels a pore keeps from powder so its carved voxels never touch air.
    pub fn clearance(&self) -> usize {
        self.pore_half_width + 1
    }
}

/// Everything that determines a synthetic build. Two seeds: one for pore
/// placement (inside `pores`), one for all image and volume noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub layers: u32,
    pub width: usize,
    pub height: usize,
    pub pores: PoreModel,
    pub render: RenderConfig,
    pub volume: VolumeConfig,
    pub noise_seed: u64,
}

impl SynthConfig {
    /// Desk-scale defaults driven by a single seed.
    pub fn new(layers: u32, width: usize, height: usize, seed: u64) -> Self {
        Self {
            layers,
            width,
            height,
            pores: PoreModel::new(0.6, 2.0, seed),
            render: RenderConfig::default(),
            volume: VolumeConfig::default(),
            noise_seed: seed,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.layers == 0 {
            return Err(SynthError::Config("at least one layer is required".into()));
        }
        if self.width < 8 || self.height < 8 {
            return Err(SynthError::Config(format!(
                "image size {}x{} is below the 8x8 minimum",
                self.width, self.height
            )));
        }
        if self.volume.voxels_per_layer == 0 {
            return Err(SynthError::Config("voxels_per_layer must be at least 1".into()));
        }
        let v = &self.volume;
        let ok = |x: f32| x.is_finite() && x >= 0.0;
        if !ok(v.material_intensity) || !ok(v.void_intensity) || !ok(v.noise) {
            return Err(SynthError::Config("volume intensities must be finite and non-negative".into()));
        }
        self.scan_rotation()?;
        self.pores.validate()?;
        self.render.validate()
    }

    pub fn scan_rotation(&self) -> Result<Rotation, SynthError> {
        Ok(self.volume.scan_rotation.parse()?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthLayer {
    pub layer: u32,
    /// Ideal cross-section, 1 = material.
    pub mask: LayerImage,
    pub seeded: PoreSet,
    pub hr: LayerImage,
    pub ot: LayerImage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthPart {
    pub entry: PlanEntry,
    /// Volume in scan orientation.
    pub volume: VoxelVolume,
    /// Rotation that brings `volume` into build orientation.
    pub rotation_to_build: Rotation,
    /// Part corners in build-oriented voxel `(x, y)` coordinates.
    pub reference_points: [[f64; 2]; 4],
    pub layers: Vec<SynthLayer>,
}

impl SynthPart {
    pub fn part(&self) -> u32 {
        self.entry.params.part
    }
}

fn render_layer(entry: &PlanEntry, cfg: &SynthConfig, layer: u32) -> Result<SynthLayer, SynthError> {
    let geom = GeometrySpec::new(entry.geometry, cfg.layers);
    let mask = cross_section(&geom, layer, cfg.width, cfg.height)?;
    let seeded = seed_pores(&mask, &entry.params, &cfg.pores, layer, cfg.volume.clearance())?;
    let (hr, ot) = render_modalities(&mask, &seeded, &entry.params, &cfg.render, cfg.noise_seed)?;
    Ok(SynthLayer {
        layer,
        mask,
        seeded,
        hr,
        ot,
    })
}

/// Voxel planes of one layer in build orientation.
fn layer_planes(part: u32, l: &SynthLayer, cfg: &SynthConfig) -> Vec<f32> {
    let v = &cfg.volume;
    let (m, k) = (v.margin, v.voxels_per_layer);
    let (nx, ny) = (cfg.width + 2 * m, cfg.height + 2 * m);
    let mut planes = Vec::with_capacity(nx * ny * k);
    for _ in 0..k {
        for y in 0..ny {
            for x in 0..nx {
                let inside = x >= m && y >= m && x < m + cfg.width && y < m + cfg.height;
                let solid = inside && l.mask.get(x - m, y - m) > 0.5;
                planes.push(if solid { v.material_intensity } else { v.void_intensity });
            }
        }
    }
    let h = v.pore_half_width as i64;
    let mid = k / 2;
    for p in &l.seeded.pores {
        let (cx, cy) = (p.x.round() as i64 + m as i64, p.y.round() as i64 + m as i64);
        for y in cy - h..=cy + h {
            for x in cx - h..=cx + h {
                if x >= 0 && y >= 0 && (x as usize) < nx && (y as usize) < ny {
                    planes[(mid * ny + y as usize) * nx + x as usize] = v.void_intensity;
                }
            }
        }
    }
    if v.noise > 0.0 {
        let normal = Normal::new(0.0f32, v.noise).expect("validated noise");
        let mut rng = stream(cfg.noise_seed, &[purpose::CT_NOISE, u64::from(part), u64::from(l.layer)]);
        for val in &mut planes {
            *val = (*val + normal.sample(&mut rng)).max(0.0);
        }
    }
    planes
}

/// Generates one part: layers in parallel, then the voxel volume.
pub fn synthesize_part(entry: &PlanEntry, cfg: &SynthConfig) -> Result<SynthPart, SynthError> {
    cfg.validate()?;
    entry.params.validate()?;
    let layers: Vec<SynthLayer> = (1..=cfg.layers)
        .into_par_iter()
        .map(|l| render_layer(entry, cfg, l))
        .collect::<Result<_, _>>()?;

    let part = entry.params.part;
    let data: Vec<f32> = layers.par_iter().flat_map_iter(|l| layer_planes(part, l, cfg)).collect();
    let v = &cfg.volume;
    let m = v.margin;
    let voxel_size = entry.params.layer_thickness / v.voxels_per_layer as f64;
    let build = VoxelVolume::new(
        cfg.width + 2 * m,
        cfg.height + 2 * m,
        cfg.layers as usize * v.voxels_per_layer,
        voxel_size,
        data,
    )?;
    let scan = cfg.scan_rotation()?;
    let volume = rotate_to_build_axis(&build, &scan)?;
    let (x0, y0) = (m as f64, m as f64);
    let (x1, y1) = ((m + cfg.width) as f64, (m + cfg.height) as f64);
    Ok(SynthPart {
        entry: *entry,
        volume,
        rotation_to_build: scan.inverse(),
        reference_points: [[x0, y0], [x1, y0], [x1, y1], [x0, y1]],
        layers,
    })
}

/// Generates every part of `plan` in memory.
pub fn build_synthetic_dataset(plan: &BuildPlan, cfg: &SynthConfig) -> Result<Vec<SynthPart>, SynthError> {
    plan.validate()?;
    plan.parts.iter().map(|e| synthesize_part(e, cfg)).collect()
}

pub fn volume_path(part: u32) -> String {
    format!("volumes/part_{part:02}.pktens")
}

pub fn image_path(kind: &str, part: u32, layer: u32) -> String {
    format!("{kind}/part_{part:02}/layer_{layer:04}.pktens")
}

fn write_part(root: &Path, sp: &SynthPart) -> Result<(PartEntry, Vec<TripletEntry>), SynthError> {
    let part = sp.part();
    let vpath = volume_path(part);
    sp.volume.save(&root.join(&vpath))?;
    let triplets = sp
        .layers
        .par_iter()
        .map(|l| -> Result<TripletEntry, CoreError> {
            let hr = image_path("hr", part, l.layer);
            let ot = image_path("ot", part, l.layer);
            write_image(&root.join(&hr), &l.hr)?;
            write_image(&root.join(&ot), &l.ot)?;
            Ok(TripletEntry {
                part,
                layer: l.layer,
                hr,
                ot,
                pp: None,
                pores: None,
                seeded_pores: Some(l.seeded.pores.clone()),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let entry = PartEntry {
        part,
        geometry: sp.entry.geometry,
        params: sp.entry.params,
        energy_density: 0.0,
        volume: Some(VolumeEntry {
            path: vpath,
            voxel_size: sp.volume.voxel_size(),
            rotation_to_build: sp.rotation_to_build.to_string(),
            reference_points: sp.reference_points,
        }),
    };
    Ok((entry, triplets))
}

/// Generates and writes the build part by part, so only one part is held
/// in memory. Writes `manifest.json`, `synth_config.json` and `plan.json`
/// under `out`. PP labels are left for the labeling stage.
pub fn write_synthetic_dataset(plan: &BuildPlan, cfg: &SynthConfig, out: &Path) -> Result<Manifest, SynthError> {
    plan.validate()?;
    cfg.validate()?;
    let mut parts = Vec::new();
    let mut triplets = Vec::new();
    for entry in &plan.parts {
        let sp = synthesize_part(entry, cfg)?;
        let seeded: usize = sp.layers.iter().map(|l| l.seeded.count()).sum();
        log::info!("part {}: {} layers, {seeded} seeded pores", sp.part(), sp.layers.len());
        let (p, t) = write_part(out, &sp)?;
        parts.push(p);
        triplets.extend(t);
    }
    let manifest = Manifest::new(cfg.layers, cfg.width, cfg.height, parts, triplets)?;
    manifest.save(&out.join(MANIFEST_FILE))?;
    let cfg_json = serde_json::to_string_pretty(cfg).expect("config serializes") + "\n";
    std::fs::write(out.join("synth_config.json"), cfg_json).map_err(|e| CoreError::Io {
        path: out.join("synth_config.json"),
        source: e,
    })?;
    std::fs::write(out.join("plan.json"), plan.to_json()).map_err(|e| CoreError::Io {
        path: out.join("plan.json"),
        source: e,
    })?;
    Ok(manifest)
}
