//! Reconstruction quality: per-band PSNR and SSIM, summaries, MSE maps.

use rayon::prelude::*;

use crate::cube::{HyperCube, Plane};
use crate::error::{Error, Result};

/// Floor applied before taking `log₁₀` in [`mse_map`].
pub const MSE_FLOOR: f64 = 1e-20;

fn check_pair(reference: &HyperCube, estimate: &HyperCube) -> Result<()> {
    if reference.shape() != estimate.shape() {
        return Err(Error::ShapeMismatch {
            left: reference.shape(),
            right: estimate.shape(),
        });
    }
    Ok(())
}

fn check_band(cube: &HyperCube, band: usize) -> Result<()> {
    if band >= cube.bands() {
        return Err(Error::BandOutOfRange {
            band,
            bands: cube.bands(),
        });
    }
    Ok(())
}

fn band_peak(values: &[f64], band: usize) -> Result<f64> {
    let peak = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if peak > 0.0 {
        Ok(peak)
    } else {
        Err(Error::ZeroPeak { band })
    }
}

/// `10·log₁₀(peak² / MSE)` with the peak taken from the reference band.
/// Identical bands give `+∞`.
pub fn psnr_band(reference: &HyperCube, estimate: &HyperCube, band: usize) -> Result<f64> {
    check_pair(reference, estimate)?;
    check_band(reference, band)?;
    let (x, y) = (reference.band(band), estimate.band(band));
    let peak = band_peak(x, band)?;
    let mse = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Band-wise PSNR statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct PsnrSummary {
    pub mean: f64,
    /// Population standard deviation over finite bands.
    pub std: f64,
    /// Sample (`n − 1`) standard deviation; zero with a single finite band.
    pub sample_std: f64,
    pub per_band: Vec<f64>,
    /// Bands excluded from the statistics because their PSNR is infinite.
    pub infinite_bands: Vec<usize>,
}

pub fn psnr_summary(reference: &HyperCube, estimate: &HyperCube) -> Result<PsnrSummary> {
    check_pair(reference, estimate)?;
    let per_band = (0..reference.bands())
        .into_par_iter()
        .map(|k| psnr_band(reference, estimate, k))
        .collect::<Result<Vec<_>>>()?;
    summarize(per_band)
}

fn summarize(per_band: Vec<f64>) -> Result<PsnrSummary> {
    let finite: Vec<f64> = per_band.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::AllInfinite);
    }
    let n = finite.len() as f64;
    let mean = finite.iter().sum::<f64>() / n;
    let ss = finite.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    let infinite_bands = per_band
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_infinite())
        .map(|(k, _)| k)
        .collect();
    Ok(PsnrSummary {
        mean,
        std: (ss / n).sqrt(),
        sample_std: if finite.len() > 1 {
            (ss / (n - 1.0)).sqrt()
        } else {
            0.0
        },
        per_band,
        infinite_bands,
    })
}

/// SSIM window and stabilizing constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    /// Side of the square uniform window.
    pub window: usize,
    pub k1: f64,
    pub k2: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 8,
            k1: 0.01,
            k2: 0.03,
        }
    }
}

/// Mean SSIM over all window positions (stride 1) with default parameters.
pub fn ssim_band(reference: &HyperCube, estimate: &HyperCube, band: usize) -> Result<f64> {
    ssim_band_with(reference, estimate, band, &SsimParams::default())
}

pub fn ssim_band_with(
    reference: &HyperCube,
    estimate: &HyperCube,
    band: usize,
    params: &SsimParams,
) -> Result<f64> {
    check_pair(reference, estimate)?;
    check_band(reference, band)?;
    let (h, w) = (reference.height(), reference.width());
    let win = params.window;
    if win == 0 || h < win || w < win {
        return Err(Error::ImageTooSmall {
            height: h,
            width: w,
            min: win,
        });
    }
    let (x, y) = (reference.band(band), estimate.band(band));
    let peak = band_peak(x, band)?;
    if x == y {
        return Ok(1.0);
    }
    let c1 = (params.k1 * peak).powi(2);
    let c2 = (params.k2 * peak).powi(2);

    // Centre both images on the reference mean so the moment sums below stay
    // well conditioned; the mean is added back for the luminance term.
    let shift = x.iter().sum::<f64>() / x.len() as f64;
    let cx: Vec<f64> = x.iter().map(|v| v - shift).collect();
    let cy: Vec<f64> = y.iter().map(|v| v - shift).collect();
    let sat = |f: &dyn Fn(usize) -> f64| {
        let mut t = vec![0.0; (h + 1) * (w + 1)];
        for r in 0..h {
            let mut row = 0.0;
            for c in 0..w {
                row += f(r * w + c);
                t[(r + 1) * (w + 1) + c + 1] = t[r * (w + 1) + c + 1] + row;
            }
        }
        t
    };
    let sx = sat(&|i| cx[i]);
    let sy = sat(&|i| cy[i]);
    let sxx = sat(&|i| cx[i] * cx[i]);
    let syy = sat(&|i| cy[i] * cy[i]);
    let sxy = sat(&|i| cx[i] * cy[i]);
    let window_sum = |t: &[f64], r: usize, c: usize| {
        let s = w + 1;
        t[(r + win) * s + c + win] - t[r * s + c + win] - t[(r + win) * s + c] + t[r * s + c]
    };

    let area = (win * win) as f64;
    let mut total = 0.0;
    for r in 0..=h - win {
        for c in 0..=w - win {
            let mx = window_sum(&sx, r, c) / area;
            let my = window_sum(&sy, r, c) / area;
            let vx = (window_sum(&sxx, r, c) / area - mx * mx).max(0.0);
            let vy = (window_sum(&syy, r, c) / area - my * my).max(0.0);
            let cov = window_sum(&sxy, r, c) / area - mx * my;
            let (ux, uy) = (mx + shift, my + shift);
            total += (2.0 * ux * uy + c1) * (2.0 * cov + c2)
                / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
        }
    }
    let count = ((h - win + 1) * (w - win + 1)) as f64;
    Ok((total / count).clamp(-1.0, 1.0))
}

/// Per-pixel `log₁₀` of the band-averaged squared error, floored at
/// [`MSE_FLOOR`].
pub fn mse_map(reference: &HyperCube, estimate: &HyperCube) -> Result<Plane> {
    check_pair(reference, estimate)?;
    let (h, w, b) = reference.shape();
    let n = h * w;
    let (x, y) = (reference.as_slice(), estimate.as_slice());
    let mut acc = vec![0.0; n];
    for k in 0..b {
        for (p, a) in acc.iter_mut().enumerate() {
            let d = x[k * n + p] - y[k * n + p];
            *a += d * d;
        }
    }
    Plane::from_vec(
        h,
        w,
        acc.into_iter()
            .map(|s| (s / b as f64).max(MSE_FLOOR).log10())
            .collect(),
    )
}

/// Everything the evaluation report prints for one reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// Mean over finite bands; `+∞` when every band is identical.
    pub psnr_mean: f64,
    pub psnr_std: f64,
    pub psnr_sample_std: f64,
    pub psnr_per_band: Vec<f64>,
    pub ssim_per_band: Vec<f64>,
    pub ssim_mean: f64,
}

impl MetricsReport {
    pub fn compute(reference: &HyperCube, estimate: &HyperCube) -> Result<Self> {
        Self::compute_with(reference, estimate, &SsimParams::default())
    }

    pub fn compute_with(
        reference: &HyperCube,
        estimate: &HyperCube,
        params: &SsimParams,
    ) -> Result<Self> {
        check_pair(reference, estimate)?;
        let bands = reference.bands();
        let per_band = (0..bands)
            .into_par_iter()
            .map(|k| {
                Ok((
                    psnr_band(reference, estimate, k)?,
                    ssim_band_with(reference, estimate, k, params)?,
                ))
            })
            .collect::<Result<Vec<(f64, f64)>>>()?;
        let (psnr_per_band, ssim_per_band): (Vec<f64>, Vec<f64>) = per_band.into_iter().unzip();
        let ssim_mean = ssim_per_band.iter().sum::<f64>() / bands as f64;
        let (psnr_mean, psnr_std, psnr_sample_std) = match summarize(psnr_per_band.clone()) {
            Ok(s) => (s.mean, s.std, s.sample_std),
            Err(Error::AllInfinite) => (f64::INFINITY, 0.0, 0.0),
            Err(e) => return Err(e),
        };
        Ok(Self {
            psnr_mean,
            psnr_std,
            psnr_sample_std,
            psnr_per_band,
            ssim_per_band,
            ssim_mean,
        })
    }
}
