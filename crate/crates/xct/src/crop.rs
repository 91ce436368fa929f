use std::fmt;

use pkde_core::LayerImage;

use crate::error::XctError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Left,
    Top,
    Right,
    Bottom,
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Edge::Left => "left",
            Edge::Top => "top",
            Edge::Right => "right",
            Edge::Bottom => "bottom",
        };
        f.write_str(s)
    }
}

/// Axis-aligned crop rectangle spanned by four reference points.
///
/// The bounding box of the points is rounded half up to whole pixels; the
/// crop covers columns `x0..x1` and rows `y0..y1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropFrame {
    pub reference_points: [[f64; 2]; 4],
    pub x0: i64,
    pub y0: i64,
    pub x1: i64,
    pub y1: i64,
}

fn round_half_up(v: f64) -> i64 {
    (v + 0.5).floor() as i64
}

impl CropFrame {
    pub fn new(reference_points: [[f64; 2]; 4]) -> Result<Self, XctError> {
        if reference_points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(XctError::Parameter {
                name: "reference_points",
                value: f64::NAN,
            });
        }
        let min_x = reference_points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let max_x = reference_points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        let min_y = reference_points.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
        let max_y = reference_points.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
        let (x0, y0, x1, y1) = (
            round_half_up(min_x),
            round_half_up(min_y),
            round_half_up(max_x),
            round_half_up(max_y),
        );
        if x0 >= x1 || y0 >= y1 {
            return Err(XctError::DegenerateFrame { x0, y0, x1, y1 });
        }
        Ok(Self {
            reference_points,
            x0,
            y0,
            x1,
            y1,
        })
    }

    /// Frame from an integer rectangle `[x0, x1) × [y0, y1)`.
    pub fn from_rect(x0: i64, y0: i64, x1: i64, y1: i64) -> Result<Self, XctError> {
        let (a, b, c, d) = (x0 as f64, y0 as f64, x1 as f64, y1 as f64);
        Self::new([[a, b], [c, b], [c, d], [a, d]])
    }

    pub fn width(&self) -> usize {
        (self.x1 - self.x0) as usize
    }

    pub fn height(&self) -> usize {
        (self.y1 - self.y0) as usize
    }

    /// Continuous point in source coordinates to crop coordinates, if it
    /// lies inside the frame.
    pub fn to_local(&self, x: f64, y: f64) -> Option<(f64, f64)> {
        let (lx, ly) = (x - self.x0 as f64, y - self.y0 as f64);
        (lx >= 0.0 && ly >= 0.0 && lx < self.width() as f64 && ly < self.height() as f64).then_some((lx, ly))
    }
}

pub fn crop(image: &LayerImage, frame: &CropFrame) -> Result<LayerImage, XctError> {
    let (w, h) = (image.width() as i64, image.height() as i64);
    let fail = |edge| XctError::OutOfBounds {
        edge,
        width: image.width(),
        height: image.height(),
    };
    if frame.x0 < 0 {
        return Err(fail(Edge::Left));
    }
    if frame.y0 < 0 {
        return Err(fail(Edge::Top));
    }
    if frame.x1 > w {
        return Err(fail(Edge::Right));
    }
    if frame.y1 > h {
        return Err(fail(Edge::Bottom));
    }
    let (x0, y0) = (frame.x0 as usize, frame.y0 as usize);
    let out = LayerImage::from_fn(image.modality(), frame.width(), frame.height(), |i, j| {
        image.get(x0 + i, y0 + j)
    })?;
    Ok(out)
}
