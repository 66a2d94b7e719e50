//! Classical demosaicing: weighted bilinear (WB), spectral difference (SD)
//! and intensity difference (ID).
//!
//! All three are linear in the frame and reproduce every measured sample
//! exactly. They serve as baselines and as initial estimates for the
//! iterative solvers.
//!
//! Border handling defaults to [`BorderMode::Normalized`]: the convolution
//! with the sample mask is divided by the convolution of the mask itself, so
//! constants survive up to the frame edge. [`BorderMode::ZeroPadded`] is the
//! plain zero-extended convolution, which darkens the outer three pixels.

use rayon::prelude::*;

use crate::cube::{HyperCube, Plane};
use crate::error::{Error, Result};
use crate::mosaic::MosaicFrame;
use crate::pattern::mask_of;

/// The separable 7-tap triangle filter `¼·[1 2 3 4 3 2 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WbKernel;

impl WbKernel {
    /// Integer numerators of the 1D taps.
    pub const NUMERATORS: [u32; 7] = [1, 2, 3, 4, 3, 2, 1];
    pub const DENOMINATOR: u32 = 4;
    /// Taps extend this many pixels either side of the centre.
    pub const RADIUS: usize = 3;

    pub fn taps() -> [f64; 7] {
        Self::NUMERATORS.map(|n| n as f64 / Self::DENOMINATOR as f64)
    }

    /// Numerator sums of the taps at offsets `≡ c (mod stride)`, `c = 0..stride`.
    ///
    /// For stride 4 every class sums to the denominator, i.e. the filter is a
    /// partition of unity for a stride-4 comb.
    pub fn residue_numerator_sums(stride: usize) -> Vec<u32> {
        let mut sums = vec![0u32; stride];
        for (i, &n) in Self::NUMERATORS.iter().enumerate() {
            let offset = i as isize - Self::RADIUS as isize;
            sums[offset.rem_euclid(stride as isize) as usize] += n;
        }
        sums
    }

    /// Sum of the 2D kernel `taps ⊗ taps`.
    pub fn mass_2d() -> f64 {
        let s: f64 = Self::taps().iter().sum();
        s * s
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum BorderMode {
    /// Shepard-style normalisation by the mask-convolved kernel.
    #[default]
    Normalized,
    /// Raw zero-extended convolution.
    ZeroPadded,
}

/// Classical interpolation method selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Interpolator {
    Wb,
    Sd,
    Id,
}

impl Interpolator {
    pub fn demosaic(self, frame: &MosaicFrame, border: BorderMode) -> Result<HyperCube> {
        match self {
            Interpolator::Wb => wb_demosaic_with(frame, border),
            Interpolator::Sd => sd_demosaic_with(frame, border),
            Interpolator::Id => id_demosaic_with(frame, border),
        }
    }
}

/// Zero-extended 2D convolution with `taps ⊗ taps` (symmetric, so this is
/// also the correlation).
fn convolve(data: &[f64], height: usize, width: usize) -> Vec<f64> {
    let taps = WbKernel::taps();
    let rad = WbKernel::RADIUS as isize;
    let mut tmp = vec![0.0; height * width];
    for r in 0..height {
        let row = &data[r * width..(r + 1) * width];
        let out = &mut tmp[r * width..(r + 1) * width];
        for (c, &v) in row.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let lo = (c as isize - rad).max(0) as usize;
            let hi = (c + WbKernel::RADIUS).min(width - 1);
            for cc in lo..=hi {
                out[cc] += taps[(cc as isize - c as isize + rad) as usize] * v;
            }
        }
    }
    let mut out = vec![0.0; height * width];
    for r in 0..height {
        let lo = (r as isize - rad).max(0) as usize;
        let hi = (r + WbKernel::RADIUS).min(height - 1);
        let dst = &mut out[r * width..(r + 1) * width];
        for rr in lo..=hi {
            let t = taps[(rr as isize - r as isize + rad) as usize];
            let src = &tmp[rr * width..(rr + 1) * width];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += t * s;
            }
        }
    }
    out
}

/// Per-band sampling support with its precomputed normaliser.
struct BandSupport {
    mask: Vec<bool>,
    norm: Vec<f64>,
}

impl BandSupport {
    fn new(mask: Vec<bool>, height: usize, width: usize) -> Self {
        let ones: Vec<f64> = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
        let norm = convolve(&ones, height, width);
        Self { mask, norm }
    }

    fn interpolate(
        &self,
        sparse: &[f64],
        height: usize,
        width: usize,
        border: BorderMode,
    ) -> Result<Vec<f64>> {
        let mut out = convolve(sparse, height, width);
        if border == BorderMode::Normalized {
            for (i, (o, &n)) in out.iter_mut().zip(&self.norm).enumerate() {
                if n == 0.0 {
                    return Err(Error::EmptyMask {
                        row: i / width,
                        col: i % width,
                    });
                }
                *o /= n;
            }
        }
        for ((o, &m), &s) in out.iter_mut().zip(&self.mask).zip(sparse) {
            if m {
                *o = s;
            }
        }
        Ok(out)
    }
}

/// Interpolates the zero-padded samples of one band: `(sparse ⊛ K) ./ (mask ⊛ K)`.
pub fn wb_interpolate_band(sparse_band: &Plane, mask: &[bool]) -> Result<Plane> {
    wb_interpolate_band_with(sparse_band, mask, BorderMode::Normalized)
}

pub fn wb_interpolate_band_with(
    sparse_band: &Plane,
    mask: &[bool],
    border: BorderMode,
) -> Result<Plane> {
    let (h, w) = (sparse_band.height(), sparse_band.width());
    if mask.len() != h * w {
        return Err(Error::DimensionMismatch {
            expected: h * w,
            got: mask.len(),
        });
    }
    let support = BandSupport::new(mask.to_vec(), h, w);
    let out = support.interpolate(sparse_band.as_slice(), h, w, border)?;
    Plane::from_vec(h, w, out)
}

fn supports(frame: &MosaicFrame) -> Result<Vec<BandSupport>> {
    let (h, w) = (frame.height(), frame.width());
    (0..frame.bands())
        .into_par_iter()
        .map(|k| Ok(BandSupport::new(mask_of(frame.pattern(), k, h, w)?, h, w)))
        .collect()
}

fn sparse_band(frame: &MosaicFrame, support: &BandSupport) -> Vec<f64> {
    frame
        .raw()
        .as_slice()
        .iter()
        .zip(&support.mask)
        .map(|(&v, &m)| if m { v } else { 0.0 })
        .collect()
}

fn wb_bands(
    frame: &MosaicFrame,
    supports: &[BandSupport],
    border: BorderMode,
) -> Result<Vec<Vec<f64>>> {
    let (h, w) = (frame.height(), frame.width());
    supports
        .par_iter()
        .map(|s| s.interpolate(&sparse_band(frame, s), h, w, border))
        .collect()
}

fn stack(frame: &MosaicFrame, bands: Vec<Vec<f64>>) -> HyperCube {
    let (h, w, b) = frame.cube_shape();
    HyperCube::from_raw_unchecked(h, w, b, bands.concat())
}

/// Weighted bilinear demosaicing, band by band.
pub fn wb_demosaic(frame: &MosaicFrame) -> Result<HyperCube> {
    wb_demosaic_with(frame, BorderMode::Normalized)
}

pub fn wb_demosaic_with(frame: &MosaicFrame, border: BorderMode) -> Result<HyperCube> {
    let supports = supports(frame)?;
    Ok(stack(frame, wb_bands(frame, &supports, border)?))
}

/// Spectral-difference demosaicing.
///
/// For target band `k` at a pixel measuring band `l`, the estimate is the
/// measurement plus the WB-interpolated difference `M − W_l` taken over the
/// band-`k` sample sites.
pub fn sd_demosaic(frame: &MosaicFrame) -> Result<HyperCube> {
    sd_demosaic_with(frame, BorderMode::Normalized)
}

pub fn sd_demosaic_with(frame: &MosaicFrame, border: BorderMode) -> Result<HyperCube> {
    let (h, w, bands) = frame.cube_shape();
    let supports = supports(frame)?;
    let wb = wb_bands(frame, &supports, border)?;
    let raw = frame.raw().as_slice();
    let band_map = frame.pattern().band_map(h, w);

    let out: Result<Vec<Vec<f64>>> = (0..bands)
        .into_par_iter()
        .map(|k| {
            let target = &supports[k];
            let mut est = sparse_band(frame, target);
            let mut delta = vec![0.0; h * w];
            for l in (0..bands).filter(|&l| l != k) {
                for (i, d) in delta.iter_mut().enumerate() {
                    *d = if target.mask[i] {
                        raw[i] - wb[l][i]
                    } else {
                        0.0
                    };
                }
                let diff = target.interpolate(&delta, h, w, border)?;
                for (i, e) in est.iter_mut().enumerate() {
                    if band_map[i] == l {
                        *e = raw[i] + diff[i];
                    }
                }
            }
            Ok(est)
        })
        .collect();
    Ok(stack(frame, out?))
}

/// Intensity-difference demosaicing.
///
/// The dense raw frame is smoothed into an intensity map `Ī`; each band is
/// `Ī` plus the WB-interpolated difference `M − Ī` over that band's sites.
/// With normalised borders `Ī` is the band average of the WB estimates, which
/// equals `raw ⊛ K/16` wherever the full kernel fits and keeps every band at
/// weight `1/B` near the edges.
pub fn id_demosaic(frame: &MosaicFrame) -> Result<HyperCube> {
    id_demosaic_with(frame, BorderMode::Normalized)
}

pub fn id_demosaic_with(frame: &MosaicFrame, border: BorderMode) -> Result<HyperCube> {
    let (h, w, _) = frame.cube_shape();
    let supports = supports(frame)?;
    let raw = frame.raw().as_slice();
    let intensity = smoothed_intensity(frame, &supports, border)?;

    let out: Result<Vec<Vec<f64>>> = supports
        .par_iter()
        .map(|s| {
            let delta: Vec<f64> = (0..h * w)
                .map(|i| {
                    if s.mask[i] {
                        raw[i] - intensity[i]
                    } else {
                        0.0
                    }
                })
                .collect();
            let diff = s.interpolate(&delta, h, w, border)?;
            Ok((0..h * w)
                .map(|i| {
                    if s.mask[i] {
                        raw[i]
                    } else {
                        intensity[i] + diff[i]
                    }
                })
                .collect())
        })
        .collect();
    Ok(stack(frame, out?))
}

/// The averaged intensity map `Ī` used by ID.
pub fn intensity_map(frame: &MosaicFrame, border: BorderMode) -> Result<Plane> {
    let supports = supports(frame)?;
    Plane::from_vec(
        frame.height(),
        frame.width(),
        smoothed_intensity(frame, &supports, border)?,
    )
}

fn smoothed_intensity(
    frame: &MosaicFrame,
    supports: &[BandSupport],
    border: BorderMode,
) -> Result<Vec<f64>> {
    let (h, w) = (frame.height(), frame.width());
    match border {
        BorderMode::Normalized => {
            let wb = wb_bands(frame, supports, border)?;
            let scale = 1.0 / wb.len() as f64;
            Ok((0..h * w)
                .map(|i| wb.iter().map(|b| b[i]).sum::<f64>() * scale)
                .collect())
        }
        BorderMode::ZeroPadded => {
            let mass = WbKernel::mass_2d();
            Ok(convolve(frame.raw().as_slice(), h, w)
                .into_iter()
                .map(|v| v / mass)
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mosaic::apply_mosaic;
    use crate::pattern::imec_4x4_pattern;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct 2D sum over the 7×7 window, no separability.
    fn naive_normalized(sparse: &[f64], mask: &[bool], h: usize, w: usize) -> Vec<Option<f64>> {
        let t = WbKernel::taps();
        (0..h * w)
            .map(|i| {
                let (r, c) = (i / w, i % w);
                let (mut num, mut den) = (0.0, 0.0);
                for dr in -3isize..=3 {
                    for dc in -3isize..=3 {
                        let (rr, cc) = (r as isize + dr, c as isize + dc);
                        if rr < 0 || cc < 0 || rr >= h as isize || cc >= w as isize {
                            continue;
                        }
                        let j = rr as usize * w + cc as usize;
                        let k = t[(dr + 3) as usize] * t[(dc + 3) as usize];
                        if mask[j] {
                            num += k * sparse[j];
                            den += k;
                        }
                    }
                }
                (den > 0.0).then(|| num / den)
            })
            .collect()
    }

    fn random_frame(h: usize, w: usize, seed: u64) -> MosaicFrame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = Plane::from_fn(h, w, |_, _| rng.random_range(0.0..10.0));
        MosaicFrame::new(raw, imec_4x4_pattern()).unwrap()
    }

    #[test]
    fn partition_of_unity() {
        assert_eq!(WbKernel::residue_numerator_sums(4), vec![4, 4, 4, 4]);
        assert_eq!(WbKernel::mass_2d(), 16.0);
    }

    #[test]
    fn constant_comb_interpolates_to_constant() {
        let mask = mask_of(&imec_4x4_pattern(), 6, 16, 16).unwrap();
        let sparse = Plane::from_fn(16, 16, |r, c| if mask[r * 16 + c] { 7.0 } else { 0.0 });
        let out = wb_interpolate_band(&sparse, &mask).unwrap();
        let oracle = naive_normalized(sparse.as_slice(), &mask, 16, 16);
        for (v, o) in out.as_slice().iter().zip(oracle) {
            assert!((v - 7.0).abs() < 1e-12);
            assert!((v - o.unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn single_sample_spreads_within_reach_only() {
        let mut mask = vec![false; 81];
        mask[4 * 9 + 4] = true;
        let sparse = Plane::from_fn(9, 9, |r, c| if (r, c) == (4, 4) { 1.0 } else { 0.0 });
        // Whole 9x9 is within ±4, but reach is ±3: corners are undefined.
        assert!(matches!(
            wb_interpolate_band(&sparse, &mask),
            Err(Error::EmptyMask { row: 0, col: 0 })
        ));

        let mut mask7 = vec![false; 49];
        mask7[3 * 7 + 3] = true;
        let sparse7 = Plane::from_fn(7, 7, |r, c| if (r, c) == (3, 3) { 1.0 } else { 0.0 });
        let out = wb_interpolate_band(&sparse7, &mask7).unwrap();
        assert!(out.as_slice().iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn linear_ramp_between_two_samples() {
        // 1D: one row, samples at columns 0 and 4.
        let mut mask = vec![false; 5];
        mask[0] = true;
        mask[4] = true;
        let sparse = Plane::from_vec(1, 5, vec![0.0, 0.0, 0.0, 0.0, 4.0]).unwrap();
        let out = wb_interpolate_band(&sparse, &mask).unwrap();
        // Hand oracle: at column j the weights are t(j) and t(j-4).
        for (j, expect) in [0.0, 1.0, 2.0, 3.0, 4.0].iter().enumerate() {
            assert!(
                (out.get(0, j) - expect).abs() < 1e-12,
                "col {j}: {}",
                out.get(0, j)
            );
        }
    }

    #[test]
    fn random_band_matches_naive_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (h, w) = (13, 10);
        let mask = mask_of(&imec_4x4_pattern(), 9, h, w).unwrap();
        let sparse = Plane::from_fn(h, w, |r, c| {
            if mask[r * w + c] {
                rng.random_range(-1.0..1.0)
            } else {
                0.0
            }
        });
        let out = wb_interpolate_band(&sparse, &mask).unwrap();
        let oracle = naive_normalized(sparse.as_slice(), &mask, h, w);
        for (i, (v, o)) in out.as_slice().iter().zip(oracle).enumerate() {
            let o = if mask[i] {
                sparse.as_slice()[i]
            } else {
                o.unwrap()
            };
            assert!((v - o).abs() < 1e-12);
        }
    }

    #[test]
    fn per_band_constants_are_recovered_by_all_methods() {
        for &(h, w) in &[(16, 16), (13, 18), (5, 7)] {
            let cube = HyperCube::from_fn(h, w, 16, |_, _, k| 1.0 + 0.37 * k as f64).unwrap();
            let frame = apply_mosaic(&cube, &imec_4x4_pattern()).unwrap();
            for method in [Interpolator::Wb, Interpolator::Sd, Interpolator::Id] {
                let est = method.demosaic(&frame, BorderMode::Normalized).unwrap();
                assert!(
                    est.relative_error(&cube).unwrap() < 1e-12,
                    "{method:?} {h}x{w}"
                );
            }
        }
    }

    #[test]
    fn intensity_of_per_band_constants_is_their_mean() {
        let cube = HyperCube::from_fn(12, 12, 16, |_, _, k| k as f64).unwrap();
        let frame = apply_mosaic(&cube, &imec_4x4_pattern()).unwrap();
        let ibar = intensity_map(&frame, BorderMode::Normalized).unwrap();
        assert!(ibar.as_slice().iter().all(|v| (v - 7.5).abs() < 1e-12));
        // Interior agrees with the zero-padded smoothing.
        let raw = intensity_map(&frame, BorderMode::ZeroPadded).unwrap();
        for r in 3..9 {
            for c in 3..9 {
                assert!((raw.get(r, c) - 7.5).abs() < 1e-12);
            }
        }
        assert!(raw.get(0, 0) < 7.5);
    }

    #[test]
    fn measured_pixels_are_preserved() {
        let frame = random_frame(11, 14, 3);
        for method in [Interpolator::Wb, Interpolator::Sd, Interpolator::Id] {
            for border in [BorderMode::Normalized, BorderMode::ZeroPadded] {
                let est = method.demosaic(&frame, border).unwrap();
                for r in 0..11 {
                    for c in 0..14 {
                        let b = frame.pattern().band_at(r, c);
                        assert_eq!(est.get(r, c, b), frame.raw().get(r, c));
                    }
                }
            }
        }
    }

    /// Straight-line SD reference built from the naive window sum.
    fn naive_sd(frame: &MosaicFrame) -> Vec<f64> {
        let (h, w, bands) = frame.cube_shape();
        let raw = frame.raw().as_slice();
        let masks: Vec<Vec<bool>> = (0..bands)
            .map(|k| mask_of(frame.pattern(), k, h, w).unwrap())
            .collect();
        let wb: Vec<Vec<f64>> = (0..bands)
            .map(|l| {
                let sparse: Vec<f64> = (0..h * w)
                    .map(|i| if masks[l][i] { raw[i] } else { 0.0 })
                    .collect();
                naive_normalized(&sparse, &masks[l], h, w)
                    .into_iter()
                    .map(Option::unwrap)
                    .collect()
            })
            .collect();
        let mut out = vec![0.0; h * w * bands];
        for k in 0..bands {
            for p in 0..h * w {
                let (r, c) = (p / w, p % w);
                let l = frame.pattern().band_at(r, c);
                out[k * h * w + p] = if l == k {
                    raw[p]
                } else {
                    let delta: Vec<f64> = (0..h * w)
                        .map(|q| if masks[k][q] { raw[q] - wb[l][q] } else { 0.0 })
                        .collect();
                    raw[p] + naive_normalized(&delta, &masks[k], h, w)[p].unwrap()
                };
            }
        }
        out
    }

    #[test]
    fn sd_matches_naive_reference_on_identical_bands() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let img = Plane::from_fn(9, 10, |_, _| rng.random_range(0.0..1.0));
        let cube = HyperCube::from_fn(9, 10, 16, |r, c, _| img.get(r, c)).unwrap();
        let frame = apply_mosaic(&cube, &imec_4x4_pattern()).unwrap();
        let est = sd_demosaic(&frame).unwrap();
        for (a, b) in est.as_slice().iter().zip(naive_sd(&frame)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn id_error_bounded_by_smoothing_residual_on_identical_bands() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let img = Plane::from_fn(16, 16, |r, c| {
            ((r as f64) * 0.3).sin() + 0.1 * c as f64 + rng.random_range(0.0..0.05)
        });
        let cube = HyperCube::from_fn(16, 16, 16, |r, c, _| img.get(r, c)).unwrap();
        let frame = apply_mosaic(&cube, &imec_4x4_pattern()).unwrap();
        let ibar = intensity_map(&frame, BorderMode::Normalized).unwrap();
        let smooth_res = img
            .as_slice()
            .iter()
            .zip(ibar.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let est = id_demosaic(&frame).unwrap();
        let err = est
            .as_slice()
            .iter()
            .zip(cube.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        // Empirical: the difference interpolation at most doubles the smoothing residual.
        assert!(err <= 2.0 * smooth_res + 1e-12, "err {err} vs {smooth_res}");
    }

    #[test]
    fn methods_are_linear() {
        let f1 = random_frame(12, 12, 1);
        let f2 = random_frame(12, 12, 2);
        let combo = MosaicFrame::new(
            Plane::from_fn(12, 12, |r, c| {
                1.5 * f1.raw().get(r, c) - 0.25 * f2.raw().get(r, c)
            }),
            imec_4x4_pattern(),
        )
        .unwrap();
        for method in [Interpolator::Wb, Interpolator::Sd, Interpolator::Id] {
            let a = method.demosaic(&f1, BorderMode::Normalized).unwrap();
            let b = method.demosaic(&f2, BorderMode::Normalized).unwrap();
            let c = method.demosaic(&combo, BorderMode::Normalized).unwrap();
            let expect = HyperCube::from_fn(12, 12, 16, |r, cc, k| {
                1.5 * a.get(r, cc, k) - 0.25 * b.get(r, cc, k)
            })
            .unwrap();
            assert!(c.relative_error(&expect).unwrap() < 1e-10, "{method:?}");
        }
    }

    #[test]
    fn translation_by_supercell_is_covariant_in_interior() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let big = HyperCube::from_fn(28, 28, 16, |_, _, _| rng.random_range(0.0..1.0)).unwrap();
        let crop = |dr: usize, dc: usize| {
            HyperCube::from_fn(20, 20, 16, |r, c, k| big.get(r + dr, c + dc, k)).unwrap()
        };
        let p = imec_4x4_pattern();
        let a = sd_demosaic(&apply_mosaic(&crop(0, 0), &p).unwrap()).unwrap();
        let b = sd_demosaic(&apply_mosaic(&crop(4, 4), &p).unwrap()).unwrap();
        // Interior of the shifted crop, far enough from both borders that
        // nested WB passes never see the edge.
        for k in 0..16 {
            for r in 6..10 {
                for c in 6..10 {
                    assert!((a.get(r + 4, c + 4, k) - b.get(r, c, k)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn too_small_frame_is_empty_mask() {
        let frame = random_frame(2, 2, 4);
        assert!(matches!(wb_demosaic(&frame), Err(Error::EmptyMask { .. })));
    }
}
