use std::collections::BTreeMap;
use std::path::Path;

use pkde_core::format::{write_image, write_pgm};
use pkde_core::manifest::MANIFEST_FILE;
use pkde_core::{LayerKey, PorePosition, PoreSet};
use pkde_labeler::{kde_label_with_status, KdeConfig, LabelStatus, DEFAULT_BANDWIDTH, DEFAULT_TRUNCATION};
use pkde_xct::{detect_pores_with, pores_to_layers, rotate_to_build_axis, CropFrame, DetectOptions, Rotation, VoxelVolume};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::LabelArgs;
use crate::error::{io_error, CliError};
use crate::metadata::RunClock;
use crate::paths::{self, layer_file};
use crate::{options_value, RunConfig};

pub const DEFAULT_THRESHOLD: f32 = 11500.0;
pub const DEFAULT_MIN_DIAMETER: f64 = 10.0;
pub const SUMMARY_FILE: &str = "label_summary.json";

/// Pore bookkeeping of one part.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PartLabelStats {
    pub part: u32,
    pub detected: usize,
    pub labeled: usize,
    /// Centroid outside the part's crop frame.
    pub dropped_outside_frame: usize,
    /// Assigned to a layer the dataset has no triplet for.
    pub dropped_no_layer: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LabelSummary {
    pub bandwidth: f64,
    pub layers: usize,
    pub empty_layers: usize,
    pub degenerate_layers: usize,
    pub parts: Vec<PartLabelStats>,
}

fn same_dir(a: &Path, b: &Path) -> Result<bool, CliError> {
    let ca = a.canonicalize().map_err(|e| io_error(a, e))?;
    let cb = b.canonicalize().map_err(|e| io_error(b, e))?;
    Ok(ca == cb)
}

fn copy_file(from: &Path, to: &Path) -> Result<(), CliError> {
    if let Some(d) = to.parent() {
        paths::create_dir(d)?;
    }
    std::fs::copy(from, to).map(drop).map_err(|e| io_error(from, e))
}

type PoreMap = BTreeMap<LayerKey, Vec<PorePosition>>;

/// Detects pores in one part's CT volume and assigns them to its layers.
fn pores_from_ct(
    root: &Path,
    entry: &pkde_core::manifest::PartEntry,
    opts: &DetectOptions,
    present: &dyn Fn(LayerKey) -> bool,
    extent: (usize, usize),
    pores: &mut PoreMap,
) -> Result<PartLabelStats, CliError> {
    let part = entry.part;
    let v = entry.volume.as_ref().expect("volumes checked up front");
    let vol = VoxelVolume::load(&root.join(&v.path), v.voxel_size)?;
    let rot: Rotation = v.rotation_to_build.parse()?;
    let built = rotate_to_build_axis(&vol, &rot)?;
    let det = detect_pores_with(&built, opts)?;
    let frame = CropFrame::new(v.reference_points)?;
    let assigned = pores_to_layers(part, &det.pores, built.voxel_size(), entry.params.layer_thickness, &frame);
    let mut stats = PartLabelStats {
        part,
        detected: det.pores.len(),
        dropped_outside_frame: assigned.dropped,
        ..Default::default()
    };
    for (layer, set) in assigned.layers {
        if !present((part, layer)) {
            stats.dropped_no_layer += set.count();
            continue;
        }
        let (inside, outside): (Vec<_>, Vec<_>) = set.pores.into_iter().partition(|p| p.in_frame(extent.0, extent.1));
        stats.dropped_outside_frame += outside.len();
        stats.labeled += inside.len();
        pores.insert((part, layer), inside);
    }
    if stats.dropped_outside_frame + stats.dropped_no_layer > 0 {
        log::info!(
            "part {part}: dropped {} pores outside the crop frame and {} on layers without a triplet",
            stats.dropped_outside_frame,
            stats.dropped_no_layer
        );
    }
    Ok(stats)
}

pub fn run(rc: &RunConfig, a: &LabelArgs) -> Result<LabelSummary, CliError> {
    let clock = RunClock::start();
    let out = rc.require_out("label")?;
    let (mut m, root) = paths::open_manifest(a.dataset.as_deref(), "label")?;
    let beta = a.bandwidth.unwrap_or(DEFAULT_BANDWIDTH);
    let kde = KdeConfig::with_truncation(beta, a.truncation.unwrap_or(DEFAULT_TRUNCATION) * beta)?;
    let opts = DetectOptions::new(
        a.threshold.unwrap_or(DEFAULT_THRESHOLD),
        a.min_diameter.unwrap_or(DEFAULT_MIN_DIAMETER),
    )
    .excluding_border();

    if a.from_seeded {
        if let Some(t) = m.triplets.iter().find(|t| t.seeded_pores.is_none()) {
            return Err(CliError::Data(format!("triplet ({}, {}) has no seeded pores", t.part, t.layer)));
        }
    } else {
        for p in &m.part_info {
            let v = p
                .volume
                .as_ref()
                .ok_or_else(|| CliError::Data(format!("manifest lists no CT volume for part {}", p.part)))?;
            paths::require_file(&root.join(&v.path), "CT volume")?;
        }
    }
    paths::create_dir(&out)?;
    if !same_dir(&root, &out)? {
        for t in &m.triplets {
            copy_file(&root.join(&t.hr), &out.join(&t.hr))?;
            copy_file(&root.join(&t.ot), &out.join(&t.ot))?;
        }
        for v in m.part_info.iter().filter_map(|p| p.volume.as_ref()) {
            copy_file(&root.join(&v.path), &out.join(&v.path))?;
        }
    }

    let extent = (m.image_width, m.image_height);
    let mut pores = PoreMap::new();
    let mut summary = LabelSummary {
        bandwidth: beta,
        layers: m.triplets.len(),
        ..Default::default()
    };
    if a.from_seeded {
        for t in &m.triplets {
            pores.insert(t.key(), t.seeded_pores.clone().unwrap_or_default());
        }
    } else {
        let keys: std::collections::BTreeSet<LayerKey> = m.triplets.iter().map(|t| t.key()).collect();
        let present = |k: LayerKey| keys.contains(&k);
        for p in &m.part_info {
            summary.parts.push(pores_from_ct(&root, p, &opts, &present, extent, &mut pores)?);
        }
    }

    let labeled = m
        .triplets
        .par_iter()
        .map(|t| -> Result<(String, Vec<PorePosition>, LabelStatus), CliError> {
            let set = PoreSet::new(t.part, t.layer, pores.get(&t.key()).cloned().unwrap_or_default());
            let (img, status) = kde_label_with_status(&set, extent.0, extent.1, &kde)?;
            let rel = layer_file("pp", t.part, t.layer, "pktens");
            write_image(&out.join(&rel), &img)?;
            write_pgm(&out.join(layer_file("pp", t.part, t.layer, "pgm")), &img)?;
            Ok((rel, set.pores, status))
        })
        .collect::<Result<Vec<_>, _>>()?;
    for (t, (rel, p, status)) in m.triplets.iter_mut().zip(labeled) {
        t.pp = Some(rel);
        t.pores = Some(p);
        match status {
            LabelStatus::Empty => summary.empty_layers += 1,
            LabelStatus::Degenerate => summary.degenerate_layers += 1,
            LabelStatus::Normalized => {}
        }
    }
    m.refresh()?;
    m.save(&out.join(MANIFEST_FILE))?;
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    paths::write_text(&out.join(SUMMARY_FILE), &text)?;
    log::info!(
        "labeled {} layers ({} without pores, {} degenerate)",
        summary.layers,
        summary.empty_layers,
        summary.degenerate_layers
    );
    clock.write(&out, "label", rc.seed, rc.threads, &options_value(a))?;
    Ok(summary)
}
