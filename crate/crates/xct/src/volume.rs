use std::path::Path;

use pkde_core::format::{read_tensor, write_tensor};

use crate::error::XctError;

/// Scalar intensity grid, `x` fastest and `z` slowest. After rotation into
/// build orientation `z` is the build direction with `z = 0` at the bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelVolume {
    nx: usize,
    ny: usize,
    nz: usize,
    /// Voxel edge length in µm.
    voxel_size: f64,
    data: Vec<f32>,
}

impl VoxelVolume {
    pub fn new(nx: usize, ny: usize, nz: usize, voxel_size: f64, data: Vec<f32>) -> Result<Self, XctError> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(XctError::Empty);
        }
        if data.len() != nx * ny * nz {
            return Err(XctError::Shape {
                nx,
                ny,
                nz,
                len: data.len(),
            });
        }
        if !voxel_size.is_finite() || voxel_size <= 0.0 {
            return Err(XctError::Parameter {
                name: "voxel_size",
                value: voxel_size,
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(XctError::Intensity {
                index,
                value: data[index],
            });
        }
        Ok(Self {
            nx,
            ny,
            nz,
            voxel_size,
            data,
        })
    }

    pub fn filled(nx: usize, ny: usize, nz: usize, voxel_size: f64, value: f32) -> Result<Self, XctError> {
        Self::new(nx, ny, nz, voxel_size, vec![value; nx * ny * nz])
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        (z * self.ny + y) * self.nx + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f32 {
        self.data[self.index(x, y, z)]
    }

    /// Sets one voxel. Intensities must stay finite and non-negative.
    pub fn set(&mut self, x: usize, y: usize, z: usize, value: f32) {
        assert!(value.is_finite() && value >= 0.0, "invalid intensity {value}");
        let i = self.index(x, y, z);
        self.data[i] = value;
    }

    /// `z`-plane as a row-major `nx × ny` slice.
    pub fn plane(&self, z: usize) -> &[f32] {
        let n = self.nx * self.ny;
        &self.data[z * n..(z + 1) * n]
    }

    /// Writes the intensities as a rank-3 `[nz, ny, nx]` tensor. The voxel
    /// size is not part of the tensor file.
    pub fn save(&self, path: &Path) -> Result<(), XctError> {
        Ok(write_tensor(path, &[self.nz, self.ny, self.nx], &self.data)?)
    }

    pub fn load(path: &Path, voxel_size: f64) -> Result<Self, XctError> {
        let t = read_tensor(path)?;
        if t.dims.len() != 3 {
            return Err(XctError::Core(pkde_core::CoreError::Format(format!(
                "{}: expected rank 3 volume, got rank {}",
                path.display(),
                t.dims.len()
            ))));
        }
        Self::new(t.dims[2], t.dims[1], t.dims[0], voxel_size, t.data)
    }
}
