use pkde_core::{LayerImage, Modality};

use crate::error::XctError;
use crate::volume::VoxelVolume;

/// Cuts a build-oriented volume into layer images.
///
/// Returns `⌊nz · voxel_size / layer_thickness⌋` CT images in build order
/// (layer 1 at the bottom). Each layer is the mean of the voxel planes it
/// covers, weighted by overlap when the layer thickness is not a whole
/// number of voxels. The volume is walked from the top layer down and the
/// result reversed.
pub fn slice_volume(vol: &VoxelVolume, layer_thickness: f64) -> Result<Vec<LayerImage>, XctError> {
    let vs = vol.voxel_size();
    if !layer_thickness.is_finite() || layer_thickness <= 0.0 {
        return Err(XctError::Parameter {
            name: "layer_thickness",
            value: layer_thickness,
        });
    }
    if layer_thickness < vs {
        return Err(XctError::Resolution {
            layer_thickness,
            voxel_size: vs,
        });
    }
    let [nx, ny, nz] = vol.dims();
    let count = (nz as f64 * vs / layer_thickness + 1e-9).floor() as usize;
    let mut top_down = Vec::with_capacity(count);
    for k in (0..count).rev() {
        let lo = k as f64 * layer_thickness;
        let hi = lo + layer_thickness;
        let z_first = (lo / vs + 1e-9).floor() as usize;
        let z_last = (((hi / vs) - 1e-9).ceil() as usize).min(nz);
        let mut acc = vec![0.0f64; nx * ny];
        let mut weight_sum = 0.0;
        for z in z_first..z_last {
            let overlap = (hi.min((z + 1) as f64 * vs) - lo.max(z as f64 * vs)).max(0.0) / vs;
            if overlap <= 0.0 {
                continue;
            }
            weight_sum += overlap;
            for (a, &v) in acc.iter_mut().zip(vol.plane(z)) {
                *a += overlap * v as f64;
            }
        }
        let data = acc.into_iter().map(|a| (a / weight_sum) as f32).collect();
        top_down.push(LayerImage::new(Modality::Ct, nx, ny, data)?);
    }
    top_down.reverse();
    Ok(top_down)
}
