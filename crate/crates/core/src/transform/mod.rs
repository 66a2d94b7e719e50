//! The sparsifying transform `Ψ`: a 2D Daubechies wavelet on each band
//! combined (Kronecker) with an orthonormal DCT across bands.
//!
//! Both factors are orthonormal, so `Ψ⁻¹ = Ψᵀ` and the forward map is also
//! the adjoint of the inverse.

mod dct;
mod wavelet;

use rayon::prelude::*;

pub use dct::{dct_spectral_forward, dct_spectral_inverse, Dct};
pub use wavelet::Daubechies;

use crate::cube::{HyperCube, Plane};
use crate::error::{Error, Result};

/// Wavelet order and depth. The spectral factor is always the DCT-II.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransformSpec {
    /// Vanishing moments of the Daubechies wavelet (2 gives the 4-tap db2).
    pub wavelet_order: usize,
    /// Decomposition depth; `None` picks `min(4, ⌊log₂ min(H,W)⌋ − 2)`, at least 1.
    pub levels: Option<usize>,
}

impl Default for TransformSpec {
    fn default() -> Self {
        Self {
            wavelet_order: 2,
            levels: None,
        }
    }
}

impl TransformSpec {
    pub fn with_levels(wavelet_order: usize, levels: usize) -> Self {
        Self {
            wavelet_order,
            levels: Some(levels),
        }
    }

    pub fn resolved_levels(&self, height: usize, width: usize) -> usize {
        self.levels.unwrap_or_else(|| {
            let min = height.min(width).max(1);
            let log2 = usize::BITS - 1 - min.leading_zeros();
            (log2 as usize).saturating_sub(2).clamp(1, 4)
        })
    }
}

/// Transform-domain coefficients, stored like a cube: spectral frequency
/// major, then the wavelet layout of each plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    height: usize,
    width: usize,
    bands: usize,
    data: Vec<f64>,
}

impl Coefficients {
    pub fn zeros(height: usize, width: usize, bands: usize) -> Self {
        Self {
            height,
            width,
            bands,
            data: vec![0.0; height * width * bands],
        }
    }

    pub fn from_vec(height: usize, width: usize, bands: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * bands {
            return Err(Error::DimensionMismatch {
                expected: height * width * bands,
                got: data.len(),
            });
        }
        Ok(Self {
            height,
            width,
            bands,
            data,
        })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.bands)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn nonzeros(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0.0).count()
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// A prepared `Ψ` for one cube shape.
#[derive(Debug, Clone)]
pub struct Psi {
    height: usize,
    width: usize,
    bands: usize,
    wavelet: Daubechies,
    dct: Dct,
    shapes: Vec<(usize, usize)>,
}

impl Psi {
    pub fn new(spec: &TransformSpec, height: usize, width: usize, bands: usize) -> Result<Self> {
        let wavelet = Daubechies::new(spec.wavelet_order)?;
        let levels = spec.resolved_levels(height, width);
        if levels == 0 {
            return Err(Error::InvalidConfig(
                "wavelet levels must be at least 1".into(),
            ));
        }
        let shapes = wavelet::level_shapes(height, width, levels)?;
        Ok(Self {
            height,
            width,
            bands,
            wavelet,
            dct: Dct::new(bands),
            shapes,
        })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.bands)
    }

    pub fn levels(&self) -> usize {
        self.shapes.len()
    }

    /// `Ψ x`: cube → coefficients.
    pub fn forward(&self, cube: &HyperCube) -> Result<Coefficients> {
        self.check(cube.shape())?;
        let mut data = cube.as_slice().to_vec();
        self.forward_in_place(&mut data);
        Ok(Coefficients {
            height: self.height,
            width: self.width,
            bands: self.bands,
            data,
        })
    }

    /// `Ψ⁻¹ c`: coefficients → cube.
    pub fn inverse(&self, coeffs: &Coefficients) -> Result<HyperCube> {
        self.check(coeffs.shape())?;
        let mut data = coeffs.data.clone();
        self.inverse_in_place(&mut data);
        if data.iter().any(|v| !v.is_finite()) {
            return HyperCube::from_vec(self.height, self.width, self.bands, data);
        }
        Ok(HyperCube::from_raw_unchecked(
            self.height,
            self.width,
            self.bands,
            data,
        ))
    }

    pub(crate) fn forward_in_place(&self, data: &mut [f64]) {
        let n = self.height * self.width;
        self.dct.apply_planes(data, n, false);
        data.par_chunks_mut(n)
            .for_each(|band| wavelet::forward_2d(&self.wavelet, &self.shapes, self.width, band));
    }

    pub(crate) fn inverse_in_place(&self, data: &mut [f64]) {
        let n = self.height * self.width;
        data.par_chunks_mut(n)
            .for_each(|band| wavelet::inverse_2d(&self.wavelet, &self.shapes, self.width, band));
        self.dct.apply_planes(data, n, true);
    }

    fn check(&self, shape: (usize, usize, usize)) -> Result<()> {
        if shape != self.shape() {
            return Err(Error::ShapeMismatch {
                left: shape,
                right: self.shape(),
            });
        }
        Ok(())
    }
}

/// Multi-level orthonormal 2D wavelet analysis of one image.
pub fn dwt2_forward(image: &Plane, spec: &TransformSpec) -> Result<Plane> {
    let wavelet = Daubechies::new(spec.wavelet_order)?;
    let shapes = wavelet::level_shapes(
        image.height(),
        image.width(),
        spec.resolved_levels(image.height(), image.width()),
    )?;
    let mut data = image.as_slice().to_vec();
    wavelet::forward_2d(&wavelet, &shapes, image.width(), &mut data);
    Plane::from_vec(image.height(), image.width(), data)
}

/// Inverse of [`dwt2_forward`].
pub fn dwt2_inverse(coeffs: &Plane, spec: &TransformSpec) -> Result<Plane> {
    let wavelet = Daubechies::new(spec.wavelet_order)?;
    let shapes = wavelet::level_shapes(
        coeffs.height(),
        coeffs.width(),
        spec.resolved_levels(coeffs.height(), coeffs.width()),
    )?;
    let mut data = coeffs.as_slice().to_vec();
    wavelet::inverse_2d(&wavelet, &shapes, coeffs.width(), &mut data);
    Plane::from_vec(coeffs.height(), coeffs.width(), data)
}

pub fn psi_forward(cube: &HyperCube, spec: &TransformSpec) -> Result<Coefficients> {
    Psi::new(spec, cube.height(), cube.width(), cube.bands())?.forward(cube)
}

pub fn psi_inverse(coeffs: &Coefficients, spec: &TransformSpec) -> Result<HyperCube> {
    let (h, w, b) = coeffs.shape();
    Psi::new(spec, h, w, b)?.inverse(coeffs)
}

/// Keeps the `k` largest-magnitude entries (ties go to the lower index) and
/// zeroes the rest. This is the Euclidean projection onto `{‖x‖₀ ≤ k}`.
pub fn hard_threshold_topk(coeffs: &[f64], k: usize) -> Vec<f64> {
    let mut out = coeffs.to_vec();
    hard_threshold_in_place(&mut out, k);
    out
}

/// In-place [`hard_threshold_topk`].
pub(crate) fn hard_threshold_in_place(values: &mut [f64], k: usize) {
    if k >= values.len() {
        return;
    }
    if k == 0 {
        values.fill(0.0);
        return;
    }
    let mut order: Vec<u32> = (0..values.len() as u32).collect();
    let cmp = |a: &u32, b: &u32| {
        let (va, vb) = (values[*a as usize].abs(), values[*b as usize].abs());
        vb.total_cmp(&va).then(a.cmp(b))
    };
    order.select_nth_unstable_by(k - 1, cmp);
    for &i in &order[k..] {
        values[i as usize] = 0.0;
    }
}
