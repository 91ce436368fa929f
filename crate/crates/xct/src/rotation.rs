//! The 24 proper axis-aligned rotations of a voxel grid.

use std::fmt;
use std::str::FromStr;

use crate::error::XctError;
use crate::volume::VoxelVolume;

/// Signed permutation matrix with determinant +1.
///
/// Applied to voxel coordinates as `new_i = Σ_j m[i][j] · old_j`, shifted so
/// that indices stay in `0..n_i`. A quarter turn about `z` maps voxel
/// `(x, y, z)` of an `nx × ny × nz` grid to `(y, nx − 1 − x, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rotation {
    m: [[i8; 3]; 3],
}

const IDENTITY: [[i8; 3]; 3] = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
const QUARTER_X: [[i8; 3]; 3] = [[1, 0, 0], [0, 0, 1], [0, -1, 0]];
const QUARTER_Y: [[i8; 3]; 3] = [[0, 0, -1], [0, 1, 0], [1, 0, 0]];
const QUARTER_Z: [[i8; 3]; 3] = [[0, 1, 0], [-1, 0, 0], [0, 0, 1]];

fn mul(a: &[[i8; 3]; 3], b: &[[i8; 3]; 3]) -> [[i8; 3]; 3] {
    let mut out = [[0i8; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn det(m: &[[i8; 3]; 3]) -> i32 {
    let m = m.map(|r| r.map(i32::from));
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

impl Rotation {
    pub fn identity() -> Self {
        Self { m: IDENTITY }
    }

    /// Rotation about a principal axis (`'x'`, `'y'` or `'z'`) by a multiple
    /// of 90 degrees.
    pub fn about(axis: char, degrees: i32) -> Result<Self, XctError> {
        if degrees % 90 != 0 {
            return Err(XctError::UnsupportedRotation(format!(
                "{degrees} degrees about {axis} is not a multiple of 90"
            )));
        }
        let quarter = match axis {
            'x' | 'X' => QUARTER_X,
            'y' | 'Y' => QUARTER_Y,
            'z' | 'Z' => QUARTER_Z,
            _ => return Err(XctError::UnsupportedRotation(format!("unknown axis `{axis}`"))),
        };
        let turns = (degrees / 90).rem_euclid(4);
        let mut m = IDENTITY;
        for _ in 0..turns {
            m = mul(&quarter, &m);
        }
        Ok(Self { m })
    }

    /// Accepts any signed permutation matrix with determinant +1.
    pub fn from_matrix(m: [[i32; 3]; 3]) -> Result<Self, XctError> {
        let ok_entries = m.iter().flatten().all(|v| (-1..=1).contains(v));
        let ok_rows = m.iter().all(|r| r.iter().filter(|v| **v != 0).count() == 1);
        let ok_cols = (0..3).all(|j| m.iter().filter(|r| r[j] != 0).count() == 1);
        if !(ok_entries && ok_rows && ok_cols) {
            return Err(XctError::UnsupportedRotation(format!("{m:?} is not axis-aligned")));
        }
        let m8 = m.map(|r| r.map(|v| v as i8));
        if det(&m8) != 1 {
            return Err(XctError::UnsupportedRotation(format!("{m:?} is a reflection")));
        }
        Ok(Self { m: m8 })
    }

    pub fn matrix(&self) -> [[i32; 3]; 3] {
        self.m.map(|r| r.map(i32::from))
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Rotation) -> Rotation {
        Rotation { m: mul(&next.m, &self.m) }
    }

    pub fn inverse(&self) -> Rotation {
        let mut t = [[0i8; 3]; 3];
        for (i, row) in self.m.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                t[j][i] = v;
            }
        }
        Rotation { m: t }
    }

    /// All 24 orientations.
    pub fn all() -> Vec<Rotation> {
        let mut out: Vec<Rotation> = Vec::with_capacity(24);
        for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
            for signs in 0..8u8 {
                let mut m = [[0i32; 3]; 3];
                for i in 0..3 {
                    m[i][perm[i]] = if signs & (1 << i) != 0 { -1 } else { 1 };
                }
                if let Ok(r) = Rotation::from_matrix(m) {
                    out.push(r);
                }
            }
        }
        out
    }

    /// Grid extent after rotation.
    pub fn rotated_dims(&self, dims: [usize; 3]) -> [usize; 3] {
        let mut out = [0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            let j = (0..3).find(|&j| self.m[i][j] != 0).expect("permutation row");
            *o = dims[j];
        }
        out
    }

    /// Maps a continuous voxel coordinate of a grid with extent `dims`.
    pub fn map_point(&self, p: [f64; 3], dims: [usize; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            let j = (0..3).find(|&j| self.m[i][j] != 0).expect("permutation row");
            *o = if self.m[i][j] > 0 {
                p[j]
            } else {
                (dims[j] - 1) as f64 - p[j]
            };
        }
        out
    }

    #[inline]
    fn map_index(&self, p: [usize; 3], dims: [usize; 3]) -> [usize; 3] {
        let mut out = [0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            let j = if self.m[i][0] != 0 {
                0
            } else if self.m[i][1] != 0 {
                1
            } else {
                2
            };
            *o = if self.m[i][j] > 0 { p[j] } else { dims[j] - 1 - p[j] };
        }
        out
    }
}

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

impl fmt::Display for Rotation {
    /// Canonical `matrix:` form, e.g. `matrix:0,1,0,-1,0,0,0,0,1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.m == IDENTITY {
            return f.write_str("identity");
        }
        let flat: Vec<String> = self.m.iter().flatten().map(|v| v.to_string()).collect();
        write!(f, "matrix:{}", flat.join(","))
    }
}

impl FromStr for Rotation {
    type Err = XctError;

    /// Parses `identity`, `matrix:a,b,...,i`, or a comma-separated chain of
    /// axis turns such as `x90,z-90` applied left to right.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() || s == "identity" {
            return Ok(Self::identity());
        }
        if let Some(rest) = s.strip_prefix("matrix:") {
            let vals: Vec<i32> = rest
                .split(',')
                .map(|v| v.trim().parse::<i32>())
                .collect::<Result<_, _>>()
                .map_err(|_| XctError::UnsupportedRotation(s.to_string()))?;
            if vals.len() != 9 {
                return Err(XctError::UnsupportedRotation(s.to_string()));
            }
            let mut m = [[0; 3]; 3];
            for (k, v) in vals.into_iter().enumerate() {
                m[k / 3][k % 3] = v;
            }
            return Self::from_matrix(m);
        }
        let mut r = Self::identity();
        for step in s.split(',') {
            let step = step.trim();
            let mut chars = step.chars();
            let axis = chars.next().ok_or_else(|| XctError::UnsupportedRotation(s.to_string()))?;
            let degrees: i32 = chars
                .as_str()
                .parse()
                .map_err(|_| XctError::UnsupportedRotation(step.to_string()))?;
            r = r.then(&Rotation::about(axis, degrees)?);
        }
        Ok(r)
    }
}

/// Losslessly permutes the voxels of `vol` by `rotation`.
pub fn rotate_to_build_axis(vol: &VoxelVolume, rotation: &Rotation) -> Result<VoxelVolume, XctError> {
    let dims = vol.dims();
    let [mx, my, _] = rotation.rotated_dims(dims);
    let mut data = vec![0.0f32; vol.data().len()];
    let src = vol.data();
    let mut i = 0;
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                let [a, b, c] = rotation.map_index([x, y, z], dims);
                data[(c * my + b) * mx + a] = src[i];
                i += 1;
            }
        }
    }
    let [nx, ny, nz] = rotation.rotated_dims(dims);
    VoxelVolume::new(nx, ny, nz, vol.voxel_size(), data)
}
