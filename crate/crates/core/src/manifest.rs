//! JSON manifest describing a dataset on disk.
//!
//! Paths inside the manifest are relative to the directory holding the
//! manifest file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{assemble_dataset_with_extent, Dataset, TripletSource};
use crate::energy::energy_density;
use crate::error::CoreError;
use crate::format::read_image;
use crate::types::{GeometryKind, LayerKey, Modality, PorePosition, ProcessParams};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    /// `Π`.
    pub parts: u32,
    /// `Λ`.
    pub layers_per_part: u32,
    /// `T`.
    pub triplet_count: usize,
    pub image_width: usize,
    pub image_height: usize,
    pub part_info: Vec<PartEntry>,
    pub triplets: Vec<TripletEntry>,
    /// Keys of the `Π × Λ` grid with no triplet.
    #[serde(default)]
    pub missing: Vec<LayerKey>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartEntry {
    pub part: u32,
    pub geometry: GeometryKind,
    pub params: ProcessParams,
    /// J/m³, derived from `params`.
    pub energy_density: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume: Option<VolumeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeEntry {
    pub path: String,
    /// Voxel edge length in µm.
    pub voxel_size: f64,
    /// Axis-aligned rotation taking the stored volume into build orientation.
    pub rotation_to_build: String,
    /// Four `(x, y)` reference points outlining the part in the rotated,
    /// sliced CT frame.
    pub reference_points: [[f64; 2]; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletEntry {
    pub part: u32,
    pub layer: u32,
    pub hr: String,
    pub ot: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pp: Option<String>,
    /// Pores the PP label was built from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pores: Option<Vec<PorePosition>>,
    /// Ground-truth pores of a synthetic build.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeded_pores: Option<Vec<PorePosition>>,
}

impl TripletEntry {
    pub fn key(&self) -> LayerKey {
        (self.part, self.layer)
    }
}

impl Manifest {
    pub fn new(
        layers_per_part: u32,
        image_width: usize,
        image_height: usize,
        mut part_info: Vec<PartEntry>,
        mut triplets: Vec<TripletEntry>,
    ) -> Result<Self, CoreError> {
        part_info.sort_by_key(|p| p.part);
        triplets.sort_by_key(TripletEntry::key);
        let parts = part_info.iter().map(|p| p.part).max().unwrap_or(0);
        let mut m = Self {
            format_version: FORMAT_VERSION,
            parts,
            layers_per_part,
            triplet_count: triplets.len(),
            image_width,
            image_height,
            part_info,
            triplets,
            missing: Vec::new(),
        };
        m.refresh()?;
        Ok(m)
    }

    /// Recomputes derived fields and validates keys.
    pub fn refresh(&mut self) -> Result<(), CoreError> {
        self.triplets.sort_by_key(TripletEntry::key);
        for w in self.triplets.windows(2) {
            if w[0].key() == w[1].key() {
                return Err(CoreError::Manifest(format!("duplicate triplet {:?}", w[0].key())));
            }
        }
        for p in &mut self.part_info {
            p.energy_density = energy_density(&p.params)?;
        }
        self.triplet_count = self.triplets.len();
        let present: std::collections::BTreeSet<LayerKey> = self.triplets.iter().map(TripletEntry::key).collect();
        self.missing = (1..=self.parts)
            .flat_map(|p| (1..=self.layers_per_part).map(move |l| (p, l)))
            .filter(|k| !present.contains(k))
            .collect();
        Ok(())
    }

    pub fn part(&self, part: u32) -> Option<&PartEntry> {
        self.part_info.iter().find(|p| p.part == part)
    }

    pub fn params(&self) -> BTreeMap<u32, ProcessParams> {
        self.part_info.iter().map(|p| (p.part, p.params)).collect()
    }

    pub fn geometry(&self) -> BTreeMap<u32, GeometryKind> {
        self.part_info.iter().map(|p| (p.part, p.geometry)).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<(), CoreError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| CoreError::io(dir, e))?;
        }
        fs::write(path, self.to_json()).map_err(|e| CoreError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, CoreError> {
        let text = fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| CoreError::json(path, e))?;
        if m.format_version != FORMAT_VERSION {
            return Err(CoreError::Manifest(format!(
                "unsupported manifest version {}",
                m.format_version
            )));
        }
        Ok(m)
    }

    /// Loads every labeled triplet into memory.
    pub fn load_dataset(&self, root: &Path) -> Result<Dataset, CoreError> {
        let mut sources = Vec::with_capacity(self.triplets.len());
        for t in &self.triplets {
            let pp = t.pp.as_ref().ok_or_else(|| {
                CoreError::Manifest(format!("triplet ({}, {}) has no PP label", t.part, t.layer))
            })?;
            sources.push(TripletSource {
                part: t.part,
                layer: t.layer,
                hr: read_image(&resolve(root, &t.hr), Modality::Hr)?,
                ot: read_image(&resolve(root, &t.ot), Modality::Ot)?,
                pp: read_image(&resolve(root, pp), Modality::Pp)?,
            });
        }
        assemble_dataset_with_extent(sources, self.params(), self.parts, self.layers_per_part)
    }
}

pub fn resolve(root: &Path, relative: &str) -> PathBuf {
    root.join(relative)
}

/// Manifest path for a dataset directory or manifest file argument.
pub fn manifest_path(arg: &Path) -> PathBuf {
    if arg.is_dir() {
        arg.join(MANIFEST_FILE)
    } else {
        arg.to_path_buf()
    }
}

/// Directory that relative manifest paths resolve against.
pub fn manifest_root(manifest: &Path) -> PathBuf {
    manifest
        .parent()
        .map(Path::to_path_buf)
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| PathBuf::from("."))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::write_image;
    use crate::types::LayerImage;

    fn entry(part: u32, layer: u32, pp: bool) -> TripletEntry {
        TripletEntry {
            part,
            layer,
            hr: format!("hr/{part}_{layer}.pktens"),
            ot: format!("ot/{part}_{layer}.pktens"),
            pp: pp.then(|| format!("pp/{part}_{layer}.pktens")),
            pores: pp.then(|| vec![PorePosition::new(1.0, 0.5)]),
            seeded_pores: None,
        }
    }

    fn part(p: u32) -> PartEntry {
        PartEntry {
            part: p,
            geometry: GeometryKind::Cube,
            params: ProcessParams::new(p, 370.0, 1300.0, 190.0, 30.0).unwrap(),
            energy_density: 0.0,
            volume: None,
        }
    }

    #[test]
    fn records_missing_layers_and_energy() {
        let m = Manifest::new(3, 2, 2, vec![part(1), part(2)], vec![entry(2, 1, false), entry(1, 1, false), entry(1, 3, false)]).unwrap();
        assert_eq!(m.triplet_count, 3);
        assert_eq!(m.missing, vec![(1, 2), (2, 2), (2, 3)]);
        assert!((m.part_info[0].energy_density - 49.93e9).abs() / 49.93e9 < 2e-3);
        assert_eq!(m.triplets[0].key(), (1, 1));
    }

    #[test]
    fn duplicate_is_rejected() {
        assert!(Manifest::new(3, 2, 2, vec![part(1)], vec![entry(1, 1, false), entry(1, 1, false)]).is_err());
    }

    #[test]
    fn load_dataset_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let m = Manifest::new(2, 2, 2, vec![part(1)], vec![entry(1, 1, true), entry(1, 2, true)]).unwrap();
        for t in &m.triplets {
            let img = LayerImage::from_fn(Modality::Hr, 2, 2, |x, y| (x + y) as f32 * 0.25).unwrap();
            for rel in [&t.hr, &t.ot, t.pp.as_ref().unwrap()] {
                write_image(&dir.path().join(rel), &img).unwrap();
            }
        }
        let path = dir.path().join(MANIFEST_FILE);
        m.save(&path).unwrap();
        let loaded = Manifest::load(&path).unwrap();
        assert_eq!(loaded, m);
        let ds = loaded.load_dataset(dir.path()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.triplets()[1].pp.modality(), Modality::Pp);
    }

    #[test]
    fn unlabeled_dataset_fails_to_load() {
        let dir = tempfile::tempdir().unwrap();
        let m = Manifest::new(1, 2, 2, vec![part(1)], vec![entry(1, 1, false)]).unwrap();
        assert!(m.load_dataset(dir.path()).is_err());
    }
}
