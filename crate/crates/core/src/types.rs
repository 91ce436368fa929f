use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// `(part, layer)` key, both 1-based.
pub type LayerKey = (u32, u32);

/// A pore location in the continuous pixel frame of its layer image.
///
/// Pixel `(i, j)` sits at coordinate `(i, j)`; `x` runs along columns and
/// `y` along rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PorePosition {
    pub x: f64,
    pub y: f64,
}

impl PorePosition {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn in_frame(&self, width: usize, height: usize) -> bool {
        self.x >= 0.0 && self.y >= 0.0 && self.x < width as f64 && self.y < height as f64
    }
}

/// All pores detected in one layer of one part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoreSet {
    pub part: u32,
    pub layer: u32,
    pub pores: Vec<PorePosition>,
}

impl PoreSet {
    pub fn new(part: u32, layer: u32, pores: Vec<PorePosition>) -> Self {
        Self { part, layer, pores }
    }

    pub fn empty(part: u32, layer: u32) -> Self {
        Self::new(part, layer, Vec::new())
    }

    /// Number of pores `Q`.
    pub fn count(&self) -> usize {
        self.pores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pores.is_empty()
    }

    pub fn check_frame(&self, width: usize, height: usize) -> Result<(), CoreError> {
        match self.pores.iter().find(|p| !p.in_frame(width, height)) {
            Some(p) => Err(CoreError::InvalidImage(format!(
                "pore ({}, {}) outside {width}x{height} frame (part {}, layer {})",
                p.x, p.y, self.part, self.layer
            ))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Modality {
    /// Visible-light high-resolution camera.
    Hr,
    /// Optical tomography (layer-integrated near infrared).
    Ot,
    /// Computed tomography cross-section.
    Ct,
    /// Pore probability label.
    Pp,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Modality::Hr => "HR",
            Modality::Ot => "OT",
            Modality::Ct => "CT",
            Modality::Pp => "PP",
        };
        f.write_str(s)
    }
}

/// Single-channel raster, row-major, `f32` intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerImage {
    modality: Modality,
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl LayerImage {
    pub fn new(modality: Modality, width: usize, height: usize, data: Vec<f32>) -> Result<Self, CoreError> {
        if width == 0 || height == 0 {
            return Err(CoreError::InvalidImage(format!("{modality} image has zero extent {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(CoreError::InvalidImage(format!(
                "{modality} image {width}x{height} has {} samples",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::InvalidImage(format!("{modality} image has non-finite sample at index {i}")));
        }
        if modality == Modality::Pp {
            if let Some(i) = data.iter().position(|v| !(0.0..=1.0).contains(v)) {
                return Err(CoreError::InvalidImage(format!(
                    "PP image sample {} at index {i} outside [0, 1]",
                    data[i]
                )));
            }
        }
        Ok(Self {
            modality,
            width,
            height,
            data,
        })
    }

    pub fn zeros(modality: Modality, width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "image extent must be non-zero");
        Self {
            modality,
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    /// Builds an image from `f(x, y)`.
    pub fn from_fn(
        modality: Modality,
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f32,
    ) -> Result<Self, CoreError> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(modality, width, height, data)
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    pub fn min(&self) -> f32 {
        self.data.iter().copied().fold(f32::INFINITY, f32::min)
    }

    pub fn max(&self) -> f32 {
        self.data.iter().copied().fold(f32::NEG_INFINITY, f32::max)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }

    /// Same pixels, different modality tag. Re-validates for PP.
    pub fn with_modality(self, modality: Modality) -> Result<Self, CoreError> {
        Self::new(modality, self.width, self.height, self.data)
    }
}

/// Laser process parameters as printed on the machine: W, mm/s, µm, µm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessParams {
    pub part: u32,
    /// Laser power in watts.
    pub laser_power: f64,
    /// Scan speed in millimeters per second.
    pub scan_speed: f64,
    /// Hatch distance in micrometers.
    pub hatch_distance: f64,
    /// Layer thickness in micrometers.
    pub layer_thickness: f64,
}

impl ProcessParams {
    pub fn new(
        part: u32,
        laser_power: f64,
        scan_speed: f64,
        hatch_distance: f64,
        layer_thickness: f64,
    ) -> Result<Self, CoreError> {
        let p = Self {
            part,
            laser_power,
            scan_speed,
            hatch_distance,
            layer_thickness,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        let fields = [
            ("laser_power", self.laser_power),
            ("scan_speed", self.scan_speed),
            ("hatch_distance", self.hatch_distance),
            ("layer_thickness", self.layer_thickness),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(CoreError::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite",
                });
            }
            if value <= 0.0 {
                return Err(CoreError::InvalidParameter {
                    name,
                    value,
                    reason: "must be strictly positive",
                });
            }
        }
        Ok(())
    }
}

/// Which of the two reference geometries a part was built with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    /// Plain prism with a constant square cross-section.
    Cube,
    /// Part with slits, an overhang and round features along the build.
    Complex,
}

/// One `(HR, OT, PP)` record.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTriplet {
    pub part: u32,
    pub layer: u32,
    pub hr: LayerImage,
    pub ot: LayerImage,
    pub pp: LayerImage,
}

impl LayerTriplet {
    pub fn key(&self) -> LayerKey {
        (self.part, self.layer)
    }

    pub fn dims(&self) -> (usize, usize) {
        self.hr.dims()
    }
}
