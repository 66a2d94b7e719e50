//! Orthonormal DCT-II along the spectral axis.

use std::f64::consts::PI;

/// Dense orthonormal DCT-II matrix; the inverse is its transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct Dct {
    size: usize,
    /// Row-major `size × size`, row `f` is frequency `f`.
    matrix: Vec<f64>,
}

impl Dct {
    pub fn new(size: usize) -> Self {
        let mut matrix = Vec::with_capacity(size * size);
        for f in 0..size {
            let scale = if f == 0 {
                (1.0 / size as f64).sqrt()
            } else {
                (2.0 / size as f64).sqrt()
            };
            for n in 0..size {
                matrix.push(scale * (PI * (n as f64 + 0.5) * f as f64 / size as f64).cos());
            }
        }
        Self { size, matrix }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn coefficient(&self, freq: usize, n: usize) -> f64 {
        self.matrix[freq * self.size + n]
    }

    pub fn forward(&self, fiber: &[f64]) -> Vec<f64> {
        (0..self.size)
            .map(|f| {
                (0..self.size)
                    .map(|n| self.coefficient(f, n) * fiber[n])
                    .sum()
            })
            .collect()
    }

    pub fn inverse(&self, coeffs: &[f64]) -> Vec<f64> {
        (0..self.size)
            .map(|n| {
                (0..self.size)
                    .map(|f| self.coefficient(f, n) * coeffs[f])
                    .sum()
            })
            .collect()
    }

    /// Applies the transform across `size` equally long planes stored
    /// back to back (band-major), in place.
    pub(crate) fn apply_planes(&self, data: &mut [f64], plane_len: usize, inverse: bool) {
        let b = self.size;
        let mut out = vec![0.0; data.len()];
        for f in 0..b {
            let dst = &mut out[f * plane_len..(f + 1) * plane_len];
            for n in 0..b {
                let w = if inverse {
                    self.coefficient(n, f)
                } else {
                    self.coefficient(f, n)
                };
                if w == 0.0 {
                    continue;
                }
                let src = &data[n * plane_len..(n + 1) * plane_len];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        }
        data.copy_from_slice(&out);
    }
}

/// Orthonormal DCT-II of one spectral fiber.
pub fn dct_spectral_forward(fiber: &[f64]) -> Vec<f64> {
    Dct::new(fiber.len()).forward(fiber)
}

/// Inverse of [`dct_spectral_forward`].
pub fn dct_spectral_inverse(coeffs: &[f64]) -> Vec<f64> {
    Dct::new(coeffs.len()).inverse(coeffs)
}
