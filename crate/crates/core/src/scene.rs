//! Target scenes: binary transmission masks plus the channel efficiency.
//!
//! A scene pixel of 1 transmits photons toward the bucket detector, 0 blocks
//! them. The channel efficiency eta_0 covers everything between the source
//! and the scene (free-space loss, collection optics) and multiplies every
//! transmitted photon's survival probability.

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::pgm::{self, Pgm};

/// Channel transmission used when a scene does not specify its own; matches
/// the weak free-space collection of the modeled bench.
pub const DEFAULT_TRANSMISSION: f64 = 0.015;

/// A binary transmission mask together with the channel efficiency.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetScene {
    /// Transmission mask with values in {0, 1}.
    pub mask: Array2<u8>,
    /// Channel transmission eta_0 in (0, 1].
    pub eta_0: f64,
}

impl TargetScene {
    pub fn new(mask: Array2<u8>, eta_0: f64) -> Result<TargetScene> {
        if mask.is_empty() {
            return Err(Error::InvalidDimension("scene mask is empty".into()));
        }
        if mask.iter().any(|&v| v > 1) {
            return Err(Error::InvalidArgument(
                "scene mask values must be 0 or 1".into(),
            ));
        }
        if !(eta_0 > 0.0 && eta_0 <= 1.0) || !eta_0.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "channel transmission {eta_0} outside (0, 1]"
            )));
        }
        Ok(TargetScene { mask, eta_0 })
    }

    /// Fraction of transmissive pixels.
    pub fn ones_fraction(&self) -> f64 {
        let ones = self.mask.iter().filter(|&&v| v == 1).count();
        ones as f64 / self.mask.len() as f64
    }
}

/// Scenes available without an input file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinScene {
    /// Block capital A rendered from three strokes.
    LetterA,
    /// Every pixel transmits.
    FullBright,
    /// No pixel transmits.
    Empty,
}

/// Builds a built-in scene at the requested resolution with the default
/// channel transmission.
///
/// The letter glyph needs at least 8 pixels per side to stay legible; it
/// spans ~75% of the frame height and keeps its filled fraction well inside
/// (0.1, 0.5) so object and background statistics are both populated.
pub fn builtin_scene(kind: BuiltinScene, rows: usize, cols: usize) -> Result<TargetScene> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidDimension("scene must have pixels".into()));
    }
    let mask = match kind {
        BuiltinScene::FullBright => Array2::ones((rows, cols)),
        BuiltinScene::Empty => Array2::zeros((rows, cols)),
        BuiltinScene::LetterA => {
            if rows < 8 || cols < 8 {
                return Err(Error::InvalidDimension(format!(
                    "letter glyph needs at least 8x8 pixels, got {rows}x{cols}"
                )));
            }
            letter_a_mask(rows, cols)
        }
    };
    TargetScene::new(mask, DEFAULT_TRANSMISSION)
}

/// Rasterizes a block capital A from three stroked segments.
fn letter_a_mask(rows: usize, cols: usize) -> Array2<u8> {
    // Glyph geometry in unit-square coordinates (x right, y down).
    let apex = (0.5, 0.125);
    let foot_l = (0.26, 0.875);
    let foot_r = (0.74, 0.875);
    // Crossbar endpoints sit on the legs at 5/8 of the glyph height.
    let t = (0.6 - apex.1) / (foot_l.1 - apex.1);
    let bar_l = (apex.0 + (foot_l.0 - apex.0) * t, 0.6);
    let bar_r = (apex.0 + (foot_r.0 - apex.0) * t, 0.6);
    let segments = [(apex, foot_l), (apex, foot_r), (bar_l, bar_r)];
    let half_width = 0.055;

    Array2::from_shape_fn((rows, cols), |(i, j)| {
        let p = (
            (j as f64 + 0.5) / cols as f64,
            (i as f64 + 0.5) / rows as f64,
        );
        let inked = segments
            .iter()
            .any(|&(a, b)| point_segment_distance(p, a, b) <= half_width);
        u8::from(inked)
    })
}

fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

/// Loads a scene mask from a PGM file, thresholding at half of maxval:
/// pixels strictly brighter than maxval/2 transmit.
pub fn load_scene(path: &Path) -> Result<TargetScene> {
    let pgm = pgm::read(path)?;
    let raster = pgm.to_matrix()?;
    let cut = pgm.maxval / 2;
    let mask = raster.mapv(|v| u8::from(v > cut));
    TargetScene::new(mask, DEFAULT_TRANSMISSION)
}

/// Writes the scene mask as a PGM file (0 or 255 per pixel).
pub fn save_scene(path: &Path, scene: &TargetScene, binary: bool) -> Result<()> {
    let image = scene.mask.mapv(|v| v * 255);
    pgm::write(path, &Pgm::from_gray(&image), binary)
}
