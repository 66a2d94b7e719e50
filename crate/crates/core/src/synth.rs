//! Seeded synthetic cubes: planted low-rank, planted `Ψ`-sparse, and a
//! natural-statistics surrogate.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cube::HyperCube;
use crate::error::{Error, Result};
use crate::transform::{Coefficients, Psi, TransformSpec};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// `fold(A·B)` with i.i.d. standard normal `A: (H·W)×r` and `B: r×bands`.
pub fn planted_low_rank(
    height: usize,
    width: usize,
    bands: usize,
    rank: usize,
    seed: u64,
) -> Result<HyperCube> {
    if rank == 0 || rank > bands {
        return Err(Error::RankOutOfRange { rank, bands });
    }
    let mut rng = rng(seed);
    let a = gaussian(height * width, rank, &mut rng);
    let b = gaussian(rank, bands, &mut rng);
    HyperCube::from_vec(height, width, bands, (a * b).as_slice().to_vec())
}

/// `Ψ⁻¹ x` for `x` with `k` standard normal entries on a uniformly random
/// support. Returns the cube and its coefficients.
pub fn planted_sparse(
    height: usize,
    width: usize,
    bands: usize,
    k: usize,
    spec: &TransformSpec,
    seed: u64,
) -> Result<(HyperCube, Coefficients)> {
    let total = height * width * bands;
    if k == 0 || k > total {
        return Err(Error::InvalidConfig(format!(
            "sparsity {k} out of range 1..={total}"
        )));
    }
    let mut rng = rng(seed);
    let mut data = vec![0.0; total];
    let mut support: Vec<usize> = sample(&mut rng, total, k).into_vec();
    support.sort_unstable();
    for i in support {
        data[i] = StandardNormal.sample(&mut rng);
    }
    let coeffs = Coefficients::from_vec(height, width, bands, data)?;
    let cube = Psi::new(spec, height, width, bands)?.inverse(&coeffs)?;
    Ok((cube, coeffs))
}

/// Parameters of [`natural_cube`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaturalParams {
    /// Number of spectral signatures mixed per pixel.
    pub materials: usize,
    /// Random Fourier modes per abundance field.
    pub modes: usize,
    /// Highest spatial frequency, in cycles per image side.
    pub max_frequency: f64,
    /// Noise standard deviation relative to the clean cube's RMS.
    pub noise: f64,
}

impl Default for NaturalParams {
    fn default() -> Self {
        Self {
            materials: 3,
            modes: 24,
            max_frequency: 12.0,
            noise: 0.01,
        }
    }
}

/// A cube with smooth spatial abundance fields mixed through a few
/// smooth spectral signatures, plus white noise.
pub fn natural_cube(height: usize, width: usize, bands: usize, seed: u64) -> Result<HyperCube> {
    natural_cube_with(height, width, bands, seed, &NaturalParams::default())
}

pub fn natural_cube_with(
    height: usize,
    width: usize,
    bands: usize,
    seed: u64,
    params: &NaturalParams,
) -> Result<HyperCube> {
    if params.materials == 0 {
        return Err(Error::InvalidConfig("need at least one material".into()));
    }
    let mut rng = rng(seed);
    let n = height * width;

    // Abundance fields: sums of Fourier modes with a 1/f amplitude falloff,
    // mapped through exp so they stay positive.
    let mut fields = DMatrix::<f64>::zeros(n, params.materials);
    for m in 0..params.materials {
        let modes: Vec<(f64, f64, f64, f64)> = (0..params.modes)
            .map(|_| {
                let f = rng.random_range(0.5..params.max_frequency.max(0.5) + 1e-9);
                let theta = rng.random_range(0.0..2.0 * PI);
                let phase = rng.random_range(0.0..2.0 * PI);
                (f * theta.cos(), f * theta.sin(), phase, 1.0 / f)
            })
            .collect();
        let norm: f64 = modes.iter().map(|m| m.3 * m.3).sum::<f64>().sqrt();
        for r in 0..height {
            for c in 0..width {
                let (y, x) = (r as f64 / height as f64, c as f64 / width as f64);
                let v: f64 = modes
                    .iter()
                    .map(|&(fx, fy, ph, a)| a * (2.0 * PI * (fx * x + fy * y) + ph).cos())
                    .sum();
                fields[(r * width + c, m)] = (v / norm).exp();
            }
        }
    }

    // Spectral signatures: positive sums of two Gaussian bumps over the band axis.
    let mut spectra = DMatrix::<f64>::zeros(params.materials, bands);
    for m in 0..params.materials {
        let bumps: Vec<(f64, f64, f64)> = (0..2)
            .map(|_| {
                (
                    rng.random_range(0.0..bands as f64),
                    rng.random_range(1.5..bands as f64 / 2.0 + 2.0),
                    rng.random_range(0.3..1.0),
                )
            })
            .collect();
        for k in 0..bands {
            let t = k as f64;
            spectra[(m, k)] = 0.1
                + bumps
                    .iter()
                    .map(|&(mu, s, a)| a * (-(t - mu).powi(2) / (2.0 * s * s)).exp())
                    .sum::<f64>();
        }
    }

    let clean = fields * spectra;
    let rms = (clean.norm_squared() / clean.len() as f64).sqrt();
    let sigma = params.noise * rms;
    let data = clean
        .as_slice()
        .iter()
        .map(|&v| {
            let e: f64 = StandardNormal.sample(&mut rng);
            v + sigma * e
        })
        .collect();
    HyperCube::from_vec(height, width, bands, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_rank_has_planted_rank() {
        let cube = planted_low_rank(8, 8, 16, 3, 1).unwrap();
        let m = DMatrix::from_vec(64, 16, cube.into_vec());
        let sv = m.singular_values();
        let mut s: Vec<f64> = sv.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        assert!(s[2] > 1e-3 * s[0]);
        assert!(s[3] < 1e-10 * s[0]);
    }

    #[test]
    fn sparse_has_k_coefficients_and_is_seeded() {
        let spec = TransformSpec::default();
        let (cube, coeffs) = planted_sparse(16, 16, 16, 50, &spec, 7).unwrap();
        assert_eq!(coeffs.nonzeros(), 50);
        let (again, _) = planted_sparse(16, 16, 16, 50, &spec, 7).unwrap();
        assert_eq!(cube, again);
        let back = Psi::new(&spec, 16, 16, 16).unwrap().forward(&cube).unwrap();
        let err: f64 = back
            .as_slice()
            .iter()
            .zip(coeffs.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn natural_cube_has_positive_peaks_and_is_seeded() {
        let a = natural_cube(32, 32, 16, 3).unwrap();
        assert!((0..16).all(|k| a.band(k).iter().any(|&v| v > 0.0)));
        assert_eq!(a, natural_cube(32, 32, 16, 3).unwrap());
        assert_ne!(a, natural_cube(32, 32, 16, 4).unwrap());
    }
}
