use pkde_core::{GeometryKind, GeometrySection, LayerImage, Modality, SectionLayout};

use crate::error::SynthError;

/// Part geometry over a build of `layers` layers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometrySpec {
    pub kind: GeometryKind,
    /// Edge length of the part's bounding square in mm.
    pub size_mm: f64,
    pub layers: u32,
}

impl GeometrySpec {
    pub fn new(kind: GeometryKind, layers: u32) -> Self {
        Self {
            kind,
            size_mm: 20.0,
            layers,
        }
    }

    pub fn section_layout(&self) -> Result<SectionLayout, SynthError> {
        Ok(SectionLayout::new(self.layers)?)
    }
}

struct Frame {
    w: f64,
    h: f64,
    /// Outer square `[b, w - b) × [b, h - b)`.
    b: f64,
}

impl Frame {
    fn in_square(&self, x: f64, y: f64) -> bool {
        x >= self.b && y >= self.b && x < self.w - self.b && y < self.h - self.b
    }
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let t = (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

/// Inclined slots cut in from the left edge.
fn slit(f: &Frame, x: f64, y: f64) -> bool {
    let angle = 20f64.to_radians();
    let len = 0.6 * f.w;
    [0.25, 0.5, 0.75].iter().any(|&fy| {
        let a = (0.0, fy * f.h);
        let b = (a.0 + len * angle.cos(), a.1 + len * angle.sin());
        segment_distance((x, y), a, b) <= 1.0
    })
}

fn disc(x: f64, y: f64, cx: f64, cy: f64, r: f64) -> bool {
    (x - cx).powi(2) + (y - cy).powi(2) <= r * r
}

/// Binary cross-section mask (1 = material, 0 = powder/air) of `layer`.
///
/// The mask is tagged as a CT image: it is the ideal CT cross-section.
/// Cubes are a constant centered square. Complex parts cycle through four
/// families along the build: a square with inclined slits, an overhang that
/// widens with the layer index, a plain square, and a set of round
/// features (three cylinders plus a shrinking hemisphere cap).
pub fn cross_section(geom: &GeometrySpec, layer: u32, width: usize, height: usize) -> Result<LayerImage, SynthError> {
    if layer == 0 || layer > geom.layers {
        return Err(SynthError::LayerOutOfRange {
            layer,
            layers: geom.layers,
        });
    }
    let f = Frame {
        w: width as f64,
        h: height as f64,
        b: (width.min(height) as f64 / 16.0).round().max(1.0),
    };
    let inside: Box<dyn Fn(f64, f64) -> bool> = match geom.kind {
        GeometryKind::Cube => Box::new(|x, y| f.in_square(x, y)),
        GeometryKind::Complex => {
            let layout = geom.section_layout()?;
            let t = layout.progress(layer)?;
            match layout.section(layer)? {
                GeometrySection::PreOverhang => Box::new(|x, y| f.in_square(x, y) && !slit(&f, x, y)),
                GeometrySection::Overhang => {
                    let span = f.w - 2.0 * f.b;
                    let right = f.b + (0.4 + 0.5 * t) * span;
                    Box::new(move |x, y| f.in_square(x, y) && x < right)
                }
                GeometrySection::PreRound => Box::new(|x, y| f.in_square(x, y)),
                GeometrySection::Round => {
                    let (w, h) = (f.w, f.h);
                    let r_cyl = 0.12 * w.min(h);
                    let r_cap = 0.22 * w.min(h) * (1.0 - t * t).sqrt();
                    Box::new(move |x, y| {
                        disc(x, y, 0.27 * w, 0.27 * h, r_cyl)
                            || disc(x, y, 0.73 * w, 0.27 * h, r_cyl)
                            || disc(x, y, 0.27 * w, 0.73 * h, r_cyl)
                            || disc(x, y, 0.68 * w, 0.68 * h, r_cap.max(1.0))
                    })
                }
            }
        }
    };
    Ok(LayerImage::from_fn(Modality::Ct, width, height, |x, y| {
        if inside(x as f64, y as f64) {
            1.0
        } else {
            0.0
        }
    })?)
}
