//! Orthonormal periodic Daubechies wavelet transforms in 1D and 2D.
//!
//! One analysis level maps a signal of length `n` to
//! `[approx (n'/2) | leftover? | detail (n'/2)]` with `n' = n & !1`. An odd
//! trailing sample is carried into the approximation part unchanged, so the
//! transform stays orthonormal for every length `≥ 2`.

use crate::error::{Error, Result};

/// Low-pass reconstruction filters, normalised so that `Σh = √2`.
#[allow(clippy::excessive_precision)]
const DB3: [f64; 6] = [
    0.332_670_552_950_082_616,
    0.806_891_509_311_092_576_49,
    0.459_877_502_118_491_570_1,
    -0.135_011_020_010_254_588_7,
    -0.085_441_273_882_026_661_693,
    0.035_226_291_885_709_536_603,
];

#[allow(clippy::excessive_precision)]
const DB4: [f64; 8] = [
    0.230_377_813_308_896_500_86,
    0.714_846_570_552_915_647_09,
    0.630_880_767_929_858_907_88,
    -0.027_983_769_416_859_854_211,
    -0.187_034_811_719_093_084_08,
    0.030_841_381_835_560_763_627,
    0.032_883_011_666_885_199_735,
    -0.010_597_401_785_069_032_105,
];

/// Quadrature-mirror filter pair for a Daubechies wavelet.
#[derive(Debug, Clone, PartialEq)]
pub struct Daubechies {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Daubechies {
    /// `order` is the number of vanishing moments (filter length `2·order`).
    pub fn new(order: usize) -> Result<Self> {
        let lo: Vec<f64> = match order {
            1 => vec![std::f64::consts::FRAC_1_SQRT_2; 2],
            2 => {
                let s3 = 3f64.sqrt();
                let d = 4.0 * std::f64::consts::SQRT_2;
                vec![
                    (1.0 + s3) / d,
                    (3.0 + s3) / d,
                    (3.0 - s3) / d,
                    (1.0 - s3) / d,
                ]
            }
            3 => DB3.to_vec(),
            4 => DB4.to_vec(),
            other => return Err(Error::UnsupportedWavelet(other)),
        };
        let len = lo.len();
        let hi = (0..len)
            .map(|n| {
                if n % 2 == 0 {
                    lo[len - 1 - n]
                } else {
                    -lo[len - 1 - n]
                }
            })
            .collect();
        Ok(Self { lo, hi })
    }

    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lo
    }

    pub fn highpass(&self) -> &[f64] {
        &self.hi
    }

    /// One analysis level on `x[..n]`, written to `out[..n]`.
    pub(crate) fn analyze(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        let even = n & !1;
        let half = even / 2;
        let odd = n - even;
        for i in 0..half {
            let (mut a, mut d) = (0.0, 0.0);
            for (t, (&h, &g)) in self.lo.iter().zip(&self.hi).enumerate() {
                let v = x[(2 * i + t) % even];
                a += h * v;
                d += g * v;
            }
            out[i] = a;
            out[half + odd + i] = d;
        }
        if odd == 1 {
            out[half] = x[even];
        }
    }

    /// Inverse of [`Self::analyze`].
    pub(crate) fn synthesize(&self, coeffs: &[f64], out: &mut [f64]) {
        let n = coeffs.len();
        let even = n & !1;
        let half = even / 2;
        let odd = n - even;
        out[..even].fill(0.0);
        for i in 0..half {
            let a = coeffs[i];
            let d = coeffs[half + odd + i];
            for (t, (&h, &g)) in self.lo.iter().zip(&self.hi).enumerate() {
                out[(2 * i + t) % even] += h * a + g * d;
            }
        }
        if odd == 1 {
            out[even] = coeffs[half];
        }
    }
}

/// Active `(rows, cols)` region at each decomposition level, finest first.
pub(crate) fn level_shapes(
    height: usize,
    width: usize,
    levels: usize,
) -> Result<Vec<(usize, usize)>> {
    let mut shapes = Vec::with_capacity(levels);
    let (mut h, mut w) = (height, width);
    for _ in 0..levels {
        if h < 2 || w < 2 {
            return Err(Error::ImageTooSmall {
                height,
                width,
                min: 1 << levels,
            });
        }
        shapes.push((h, w));
        h = h.div_ceil(2);
        w = w.div_ceil(2);
    }
    Ok(shapes)
}

/// In-place multi-level 2D analysis of a row-major `height × width` image.
pub(crate) fn forward_2d(
    wavelet: &Daubechies,
    shapes: &[(usize, usize)],
    width: usize,
    data: &mut [f64],
) {
    let longest = shapes.first().map_or(0, |&(h, w)| h.max(w));
    let mut line = vec![0.0; longest];
    let mut out = vec![0.0; longest];
    for &(h, w) in shapes {
        for r in 0..h {
            let row = &mut data[r * width..r * width + w];
            wavelet.analyze(row, &mut out[..w]);
            row.copy_from_slice(&out[..w]);
        }
        for c in 0..w {
            for r in 0..h {
                line[r] = data[r * width + c];
            }
            wavelet.analyze(&line[..h], &mut out[..h]);
            for r in 0..h {
                data[r * width + c] = out[r];
            }
        }
    }
}

/// In-place inverse of [`forward_2d`].
pub(crate) fn inverse_2d(
    wavelet: &Daubechies,
    shapes: &[(usize, usize)],
    width: usize,
    data: &mut [f64],
) {
    let longest = shapes.first().map_or(0, |&(h, w)| h.max(w));
    let mut line = vec![0.0; longest];
    let mut out = vec![0.0; longest];
    for &(h, w) in shapes.iter().rev() {
        for c in 0..w {
            for r in 0..h {
                line[r] = data[r * width + c];
            }
            wavelet.synthesize(&line[..h], &mut out[..h]);
            for r in 0..h {
                data[r * width + c] = out[r];
            }
        }
        for r in 0..h {
            let row = &mut data[r * width..r * width + w];
            wavelet.synthesize(row, &mut out[..w]);
            row.copy_from_slice(&out[..w]);
        }
    }
}
