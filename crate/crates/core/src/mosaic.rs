//! The sampling operator `P_Ω` (cube → sensor frame) and its adjoint.

use crate::cube::{HyperCube, Plane};
use crate::error::{Error, Result};
use crate::pattern::MosaicPattern;

/// A raw sensor frame: one measurement per pixel plus the pattern that says
/// which band each measurement belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct MosaicFrame {
    raw: Plane,
    pattern: MosaicPattern,
}

impl MosaicFrame {
    pub fn new(raw: Plane, pattern: MosaicPattern) -> Result<Self> {
        if raw.height() == 0 || raw.width() == 0 {
            return Err(Error::EmptyDimension {
                height: raw.height(),
                width: raw.width(),
                bands: 1,
            });
        }
        if let Some(i) = raw.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                row: i / raw.width(),
                col: i % raw.width(),
                band: 0,
            });
        }
        Ok(Self { raw, pattern })
    }

    pub fn height(&self) -> usize {
        self.raw.height()
    }

    pub fn width(&self) -> usize {
        self.raw.width()
    }

    pub fn pixels(&self) -> usize {
        self.raw.height() * self.raw.width()
    }

    pub fn bands(&self) -> usize {
        self.pattern.band_count()
    }

    pub fn raw(&self) -> &Plane {
        &self.raw
    }

    pub fn pattern(&self) -> &MosaicPattern {
        &self.pattern
    }

    /// Shape of the cube this frame samples.
    pub fn cube_shape(&self) -> (usize, usize, usize) {
        (self.height(), self.width(), self.bands())
    }

    pub fn norm(&self) -> f64 {
        self.raw
            .as_slice()
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Fraction of cube entries that are measured (`1/B`).
    pub fn sampling_ratio(&self) -> f64 {
        1.0 / self.bands() as f64
    }
}

/// Samples `cube` through `pattern`: `raw(p) = cube(p, band_of(p mod cell))`.
pub fn apply_mosaic(cube: &HyperCube, pattern: &MosaicPattern) -> Result<MosaicFrame> {
    if cube.bands() != pattern.band_count() {
        return Err(Error::BandCountMismatch {
            cube: cube.bands(),
            pattern: pattern.band_count(),
        });
    }
    let (h, w) = (cube.height(), cube.width());
    let raw = Plane::from_fn(h, w, |r, c| cube.get(r, c, pattern.band_at(r, c)));
    Ok(MosaicFrame {
        raw,
        pattern: pattern.clone(),
    })
}

/// Zero-padded adjoint `P_Ωᵀ`: each measurement lands in its band, every
/// other entry is zero.
pub fn embed(frame: &MosaicFrame, bands: usize) -> Result<HyperCube> {
    if bands < frame.bands() {
        return Err(Error::BandCountMismatch {
            cube: bands,
            pattern: frame.bands(),
        });
    }
    let (h, w) = (frame.height(), frame.width());
    let mut cube = HyperCube::from_raw_unchecked(h, w, bands, vec![0.0; h * w * bands]);
    for r in 0..h {
        for c in 0..w {
            cube.set(r, c, frame.pattern.band_at(r, c), frame.raw.get(r, c));
        }
    }
    Ok(cube)
}

/// `apply_mosaic(cube) − frame` and its norm relative to the frame.
pub fn sample_residual(cube: &HyperCube, frame: &MosaicFrame) -> Result<(Plane, f64)> {
    if cube.shape() != frame.cube_shape() {
        return Err(Error::ShapeMismatch {
            left: cube.shape(),
            right: frame.cube_shape(),
        });
    }
    let (h, w) = (frame.height(), frame.width());
    let residual = Plane::from_fn(h, w, |r, c| {
        cube.get(r, c, frame.pattern.band_at(r, c)) - frame.raw.get(r, c)
    });
    let res_norm = residual
        .as_slice()
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    let rel = relative_norm(res_norm, frame.norm())?;
    Ok((residual, rel))
}

pub(crate) fn relative_norm(residual: f64, reference: f64) -> Result<f64> {
    if reference == 0.0 {
        if residual == 0.0 {
            Ok(0.0)
        } else {
            Err(Error::ZeroMeasurement)
        }
    } else {
        Ok(residual / reference)
    }
}
