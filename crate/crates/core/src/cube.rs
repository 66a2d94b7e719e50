//! Dense data containers: the `H×W×B` hyperspectral cube and single 2D planes.
//!
//! Cubes are stored band-major (band, row, column). With that layout the
//! `(H·W)×B` spectral unfolding is the same buffer read column-major, so the
//! matrix solvers never copy.

use crate::error::{Error, Result};

/// A dense 2D array of `f64`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![0.0; height * width],
        }
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::DimensionMismatch {
                expected: height * width,
                got: data.len(),
            });
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

/// A dense `height × width × bands` cube of radiance samples.
///
/// Every value is finite; constructors reject NaN and infinities.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperCube {
    height: usize,
    width: usize,
    bands: usize,
    data: Vec<f64>,
}

impl HyperCube {
    /// Builds a cube from band-major data, validating shape and finiteness.
    pub fn from_vec(height: usize, width: usize, bands: usize, data: Vec<f64>) -> Result<Self> {
        validate_cube(height, width, bands, &data)?;
        Ok(Self {
            height,
            width,
            bands,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize, bands: usize) -> Result<Self> {
        Self::from_vec(height, width, bands, vec![0.0; height * width * bands])
    }

    /// `f(row, col, band)` must return finite values.
    pub fn from_fn(
        height: usize,
        width: usize,
        bands: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * bands);
        for k in 0..bands {
            for r in 0..height {
                for c in 0..width {
                    data.push(f(r, c, k));
                }
            }
        }
        Self::from_vec(height, width, bands, data)
    }

    /// Stacks equally sized planes as bands.
    pub fn from_planes(planes: Vec<Plane>) -> Result<Self> {
        let first = planes.first().ok_or(Error::EmptyDimension {
            height: 0,
            width: 0,
            bands: 0,
        })?;
        let (h, w) = (first.height, first.width);
        let mut data = Vec::with_capacity(h * w * planes.len());
        for p in &planes {
            if p.height != h || p.width != w {
                return Err(Error::ShapeMismatch {
                    left: (h, w, 1),
                    right: (p.height, p.width, 1),
                });
            }
            data.extend_from_slice(&p.data);
        }
        Self::from_vec(h, w, planes.len(), data)
    }

    /// Construction path for internal producers that guarantee the invariants.
    pub(crate) fn from_raw_unchecked(
        height: usize,
        width: usize,
        bands: usize,
        data: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(data.len(), height * width * bands);
        Self {
            height,
            width,
            bands,
            data,
        }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn bands(&self) -> usize {
        self.bands
    }

    #[inline]
    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.bands)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, band: usize) -> f64 {
        self.data[(band * self.height + row) * self.width + col]
    }

    #[inline]
    pub(crate) fn set(&mut self, row: usize, col: usize, band: usize, value: f64) {
        self.data[(band * self.height + row) * self.width + col] = value;
    }

    /// Band `k` as a contiguous row-major slice.
    pub fn band(&self, k: usize) -> &[f64] {
        let n = self.pixels();
        &self.data[k * n..(k + 1) * n]
    }

    pub fn band_plane(&self, k: usize) -> Plane {
        Plane {
            height: self.height,
            width: self.width,
            data: self.band(k).to_vec(),
        }
    }

    /// The spectral fiber at pixel `(row, col)`.
    pub fn fiber(&self, row: usize, col: usize) -> Vec<f64> {
        (0..self.bands).map(|k| self.get(row, col, k)).collect()
    }

    /// Band-major raw data.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Re-checks the invariants (useful after deserialization paths).
    pub fn validate(&self) -> Result<()> {
        validate_cube(self.height, self.width, self.bands, &self.data)
    }

    /// Returns a copy scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_vec(
            self.height,
            self.width,
            self.bands,
            self.data.iter().map(|v| v * factor).collect(),
        )
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `‖self − other‖_F / ‖other‖_F`.
    pub fn relative_error(&self, reference: &HyperCube) -> Result<f64> {
        if self.shape() != reference.shape() {
            return Err(Error::ShapeMismatch {
                left: self.shape(),
                right: reference.shape(),
            });
        }
        let diff: f64 = self
            .data
            .iter()
            .zip(&reference.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let norm = reference.frobenius_norm();
        Ok(if norm == 0.0 {
            diff.sqrt()
        } else {
            diff.sqrt() / norm
        })
    }
}

/// Checks the cube invariants: positive dimensions, matching length, finite values.
pub fn validate_cube(height: usize, width: usize, bands: usize, data: &[f64]) -> Result<()> {
    if height == 0 || width == 0 || bands == 0 {
        return Err(Error::EmptyDimension {
            height,
            width,
            bands,
        });
    }
    let expected = height * width * bands;
    if data.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: data.len(),
        });
    }
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        let n = height * width;
        return Err(Error::NonFiniteValue {
            band: i / n,
            row: (i % n) / width,
            col: i % width,
        });
    }
    Ok(())
}
