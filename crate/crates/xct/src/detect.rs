//! Threshold pore detection.
//!
//! Voxels with intensity strictly below the threshold are void: pores are
//! low-density regions in CT. Void voxels are grouped into 6-connected
//! components with a two-pass union-find scan.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::XctError;
use crate::volume::VoxelVolume;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedPore {
    /// Mean voxel coordinate `(x, y, z)` of the component.
    pub centroid: [f64; 3],
    pub voxel_count: usize,
    /// Diameter of the sphere with the component's volume, in µm.
    pub equivalent_diameter: f64,
}

/// `voxel_size · (6 n / π)^(1/3)`.
pub fn equivalent_diameter(voxel_count: usize, voxel_size: f64) -> f64 {
    voxel_size * (6.0 * voxel_count as f64 / PI).cbrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectOptions {
    pub intensity_threshold: f32,
    /// Minimum equivalent diameter in µm.
    pub min_diameter: f64,
    /// Drop components that touch the volume boundary. Surrounding air is
    /// below threshold too and always reaches the boundary.
    pub exclude_border: bool,
}

impl DetectOptions {
    pub fn new(intensity_threshold: f32, min_diameter: f64) -> Self {
        Self {
            intensity_threshold,
            min_diameter,
            exclude_border: false,
        }
    }

    pub fn excluding_border(mut self) -> Self {
        self.exclude_border = true;
        self
    }
}

/// Full detection result with bookkeeping for the rejected components.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub pores: Vec<DetectedPore>,
    /// All voxels below threshold.
    pub void_voxels: usize,
    /// Voxels in components below the minimum diameter.
    pub small_voxels: usize,
    pub small_components: usize,
    /// Voxels in border-touching components (only with `exclude_border`).
    pub border_voxels: usize,
    pub border_components: usize,
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn find(&mut self, mut a: u32) -> u32 {
        while self.parent[a as usize] != a {
            let next = self.parent[a as usize];
            self.parent[a as usize] = self.parent[next as usize];
            a = next;
        }
        a
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi as usize] = lo;
        }
    }
}

fn validate(opts: &DetectOptions) -> Result<(), XctError> {
    if !opts.intensity_threshold.is_finite() {
        return Err(XctError::Parameter {
            name: "intensity_threshold",
            value: opts.intensity_threshold as f64,
        });
    }
    if !opts.min_diameter.is_finite() || opts.min_diameter < 0.0 {
        return Err(XctError::Parameter {
            name: "min_diameter",
            value: opts.min_diameter,
        });
    }
    Ok(())
}

/// Pores as 6-connected components of voxels below `intensity_threshold`
/// with equivalent diameter at least `min_diameter` µm, sorted by centroid
/// `(z, y, x)`.
pub fn detect_pores(vol: &VoxelVolume, intensity_threshold: f32, min_diameter: f64) -> Result<Vec<DetectedPore>, XctError> {
    detect_pores_with(vol, &DetectOptions::new(intensity_threshold, min_diameter)).map(|d| d.pores)
}

pub fn detect_pores_with(vol: &VoxelVolume, opts: &DetectOptions) -> Result<Detection, XctError> {
    validate(opts)?;
    let [nx, ny, nz] = vol.dims();
    let data = vol.data();
    const NONE: u32 = u32::MAX;

    let mut labels = vec![NONE; data.len()];
    let mut uf = UnionFind { parent: Vec::new() };
    let mut void_voxels = 0usize;

    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let i = vol.index(x, y, z);
                if data[i] >= opts.intensity_threshold {
                    continue;
                }
                void_voxels += 1;
                let mut label = NONE;
                let backward = [
                    (x > 0).then(|| i - 1),
                    (y > 0).then(|| i - nx),
                    (z > 0).then(|| i - nx * ny),
                ];
                for j in backward.into_iter().flatten() {
                    let lj = labels[j];
                    if lj == NONE {
                        continue;
                    }
                    if label == NONE {
                        label = lj;
                    } else {
                        uf.union(label, lj);
                    }
                }
                if label == NONE {
                    label = uf.parent.len() as u32;
                    uf.parent.push(label);
                }
                labels[i] = label;
            }
        }
    }

    #[derive(Clone, Copy, Default)]
    struct Acc {
        count: usize,
        sum: [f64; 3],
        border: bool,
    }
    let mut acc = vec![Acc::default(); uf.parent.len()];
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let l = labels[vol.index(x, y, z)];
                if l == NONE {
                    continue;
                }
                let root = uf.find(l) as usize;
                let a = &mut acc[root];
                a.count += 1;
                a.sum[0] += x as f64;
                a.sum[1] += y as f64;
                a.sum[2] += z as f64;
                a.border |= x == 0 || y == 0 || z == 0 || x + 1 == nx || y + 1 == ny || z + 1 == nz;
            }
        }
    }

    let mut out = Detection {
        pores: Vec::new(),
        void_voxels,
        small_voxels: 0,
        small_components: 0,
        border_voxels: 0,
        border_components: 0,
    };
    for a in acc.iter().filter(|a| a.count > 0) {
        if opts.exclude_border && a.border {
            out.border_voxels += a.count;
            out.border_components += 1;
            continue;
        }
        let d = equivalent_diameter(a.count, vol.voxel_size());
        if d < opts.min_diameter {
            out.small_voxels += a.count;
            out.small_components += 1;
            continue;
        }
        let n = a.count as f64;
        out.pores.push(DetectedPore {
            centroid: [a.sum[0] / n, a.sum[1] / n, a.sum[2] / n],
            voxel_count: a.count,
            equivalent_diameter: d,
        });
    }
    out.pores.sort_by(|a, b| {
        a.centroid[2]
            .total_cmp(&b.centroid[2])
            .then(a.centroid[1].total_cmp(&b.centroid[1]))
            .then(a.centroid[0].total_cmp(&b.centroid[0]))
    });
    Ok(out)
}
