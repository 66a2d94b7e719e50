//! Conjugate-gradient iterative hard thresholding in the `Ψ` domain.
//!
//! The measurement operator is `A = P_Ω Ψ⁻¹`, so `A* = Ψ P_Ωᵀ`. Within one
//! support the search direction is a conjugate-gradient update on the
//! restricted least-squares problem; a support change restarts it.

use crate::config::SolverConfig;
use crate::cube::HyperCube;
use crate::error::Result;
use crate::interp::BorderMode;
use crate::mosaic::{relative_norm, MosaicFrame};
use crate::transform::{hard_threshold_in_place, Psi, TransformSpec};

use super::{
    check_init, dot, initial_estimate, norm_sq, Monitor, SolveTrace, BACKTRACK_STEPS, MIN_CURVATURE,
};

/// `P_Ω Ψ⁻¹` and its adjoint for one frame.
struct Sensing<'a> {
    psi: Psi,
    band_map: Vec<usize>,
    pixels: usize,
    y: &'a [f64],
    scratch: Vec<f64>,
}

impl<'a> Sensing<'a> {
    fn new(frame: &'a MosaicFrame, spec: &TransformSpec) -> Result<Self> {
        let (h, w, b) = frame.cube_shape();
        Ok(Self {
            psi: Psi::new(spec, h, w, b)?,
            band_map: frame.pattern().band_map(h, w),
            pixels: h * w,
            y: frame.raw().as_slice(),
            scratch: vec![0.0; h * w * b],
        })
    }

    fn apply(&mut self, coeffs: &[f64], out: &mut [f64]) {
        self.scratch.copy_from_slice(coeffs);
        self.psi.inverse_in_place(&mut self.scratch);
        for (p, (o, &b)) in out.iter_mut().zip(&self.band_map).enumerate() {
            *o = self.scratch[b * self.pixels + p];
        }
    }

    fn adjoint(&self, meas: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (p, (&m, &b)) in meas.iter().zip(&self.band_map).enumerate() {
            out[b * self.pixels + p] = m;
        }
        self.psi.forward_in_place(out);
    }

    /// `y − A x` given `A x`.
    fn residual(&self, ax: &[f64], out: &mut [f64]) {
        for ((o, &a), &y) in out.iter_mut().zip(ax).zip(self.y) {
            *o = y - a;
        }
    }
}

fn restrict(v: &[f64], support: &[bool], out: &mut [f64]) {
    for ((o, &a), &s) in out.iter_mut().zip(v).zip(support) {
        *o = if s { a } else { 0.0 };
    }
}

/// Support of `x`, or of the top-`k` entries of `g` when `x` is zero.
fn support_of(x: &[f64], g: &[f64], k: usize, out: &mut [bool]) {
    if x.iter().any(|&v| v != 0.0) {
        for (s, &v) in out.iter_mut().zip(x) {
            *s = v != 0.0;
        }
    } else {
        let mut top = g.to_vec();
        hard_threshold_in_place(&mut top, k);
        for (s, &v) in out.iter_mut().zip(&top) {
            *s = v != 0.0;
        }
    }
}

/// Sparse reconstruction started from the interpolation named in
/// `config.init` (normalized borders).
pub fn cgiht_cs(
    frame: &MosaicFrame,
    spec: &TransformSpec,
    config: &SolverConfig,
) -> Result<(HyperCube, SolveTrace)> {
    let init = initial_estimate(frame, config.init, BorderMode::Normalized)?;
    cgiht_cs_from(frame, spec, config, &init)
}

/// Sparse reconstruction from an explicit initial cube.
pub fn cgiht_cs_from(
    frame: &MosaicFrame,
    spec: &TransformSpec,
    config: &SolverConfig,
    init: &HyperCube,
) -> Result<(HyperCube, SolveTrace)> {
    config.validate()?;
    check_init(frame, init)?;
    let (h, w, b) = frame.cube_shape();
    let len = h * w * b;
    let n = h * w;
    let k = config.resolved_sparsity(len);
    let y_norm = frame.norm();

    let mut op = Sensing::new(frame, spec)?;
    let mut x = init.as_slice().to_vec();
    op.psi.forward_in_place(&mut x);
    hard_threshold_in_place(&mut x, k);

    let mut ax = vec![0.0; n];
    let mut r = vec![0.0; n];
    op.apply(&x, &mut ax);
    op.residual(&ax, &mut r);
    let mut rel = relative_norm(norm_sq(&r).sqrt(), y_norm)?;

    let mut monitor = Monitor::new(config);
    if let Some(reason) = monitor.push(rel)? {
        return finish(&op, x, monitor.trace(reason));
    }

    let mut g = vec![0.0; len];
    let mut g_t = vec![0.0; len];
    let mut ag_t = vec![0.0; n];
    let mut p = vec![0.0; len];
    let mut ap_t = vec![0.0; n];
    let mut support = vec![false; len];
    let mut prev_support = vec![false; len];
    let mut have_direction = false;
    let mut cand = vec![0.0; len];
    let mut cand_ax = vec![0.0; n];
    let mut cand_r = vec![0.0; n];

    loop {
        op.adjoint(&r, &mut g);
        support_of(&x, &g, k, &mut support);
        let restart = !have_direction || support != prev_support;

        restrict(&g, &support, &mut g_t);
        op.apply(&g_t, &mut ag_t);
        let gt_sq = norm_sq(&g_t);
        let agt_sq = norm_sq(&ag_t);

        // Conjugate step on the current support.
        let mut cg_alpha = None;
        if restart {
            if agt_sq > MIN_CURVATURE {
                p.copy_from_slice(&g);
                ap_t.copy_from_slice(&ag_t);
                cg_alpha = Some(gt_sq / agt_sq);
            }
        } else {
            // `ap_t` still holds `A p_T` for the previous direction on this
            // same support.
            let app = norm_sq(&ap_t);
            let beta = if app > MIN_CURVATURE {
                -dot(&ag_t, &ap_t) / app
            } else {
                0.0
            };
            for (pi, &gi) in p.iter_mut().zip(&g) {
                *pi = gi + beta * *pi;
            }
            for (a, &ag) in ap_t.iter_mut().zip(&ag_t) {
                *a = ag + beta * *a;
            }
            let denom = norm_sq(&ap_t);
            let num: f64 = g_t
                .iter()
                .zip(&p)
                .zip(&support)
                .filter(|(_, &s)| s)
                .map(|((a, b), _)| a * b)
                .sum();
            if denom > MIN_CURVATURE && num > 0.0 {
                cg_alpha = Some(num / denom);
            }
        }

        let mut accepted = None;
        if let Some(alpha) = cg_alpha {
            accepted = try_step(
                &mut op,
                &x,
                &p,
                alpha,
                k,
                &mut cand,
                &mut cand_ax,
                &mut cand_r,
                y_norm,
                rel,
            )?;
        }
        if accepted.is_none() {
            // Steepest-descent fallback, then backtracking on its step.
            have_direction = false;
            let alpha = if agt_sq > MIN_CURVATURE {
                Some(gt_sq / agt_sq)
            } else {
                full_gradient_step(&mut op, &g, &mut cand_ax)
            };
            if let Some(mut alpha) = alpha {
                for _ in 0..=BACKTRACK_STEPS {
                    accepted = try_step(
                        &mut op,
                        &x,
                        &g,
                        alpha,
                        k,
                        &mut cand,
                        &mut cand_ax,
                        &mut cand_r,
                        y_norm,
                        rel,
                    )?;
                    if accepted.is_some() {
                        break;
                    }
                    alpha *= 0.5;
                }
            }
        } else {
            have_direction = true;
        }

        if let Some(new_rel) = accepted {
            std::mem::swap(&mut x, &mut cand);
            std::mem::swap(&mut r, &mut cand_r);
            rel = new_rel;
            prev_support.copy_from_slice(&support);
        }
        if let Some(reason) = monitor.push(rel)? {
            return finish(&op, x, monitor.trace(reason));
        }
    }
}

/// Full-gradient exact step, used when the gradient vanishes on the support.
fn full_gradient_step(op: &mut Sensing<'_>, g: &[f64], scratch: &mut [f64]) -> Option<f64> {
    let g_sq = norm_sq(g);
    if g_sq == 0.0 {
        return None;
    }
    op.apply(g, scratch);
    let ag_sq = norm_sq(scratch);
    (ag_sq > MIN_CURVATURE).then(|| g_sq / ag_sq)
}

/// Evaluates `H_k(x + α d)`; returns its relative residual if it does not
/// exceed `current`.
#[allow(clippy::too_many_arguments)]
fn try_step(
    op: &mut Sensing<'_>,
    x: &[f64],
    d: &[f64],
    alpha: f64,
    k: usize,
    cand: &mut [f64],
    cand_ax: &mut [f64],
    cand_r: &mut [f64],
    y_norm: f64,
    current: f64,
) -> Result<Option<f64>> {
    for ((c, &xi), &di) in cand.iter_mut().zip(x).zip(d) {
        *c = xi + alpha * di;
    }
    hard_threshold_in_place(cand, k);
    op.apply(cand, cand_ax);
    op.residual(cand_ax, cand_r);
    let rel = relative_norm(norm_sq(cand_r).sqrt(), y_norm)?;
    Ok((rel <= current).then_some(rel))
}

fn finish(op: &Sensing<'_>, mut x: Vec<f64>, trace: SolveTrace) -> Result<(HyperCube, SolveTrace)> {
    op.psi.inverse_in_place(&mut x);
    let (h, w, b) = op.psi.shape();
    Ok((HyperCube::from_vec(h, w, b, x)?, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::InitMethod;
    use crate::mosaic::{apply_mosaic, sample_residual};
    use crate::pattern::imec_4x4_pattern;
    use crate::solver::StopReason;
    use crate::transform::Coefficients;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cube(h: usize, w: usize, seed: u64) -> HyperCube {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        HyperCube::from_fn(h, w, 16, |_, _, _| rng.random_range(0.0..1.0)).unwrap()
    }

    #[test]
    fn fixed_point_at_planted_solution() {
        let spec = TransformSpec::default();
        let psi = Psi::new(&spec, 16, 16, 16).unwrap();
        let mut data = vec![0.0; 16 * 16 * 16];
        for (i, idx) in [3usize, 77, 500, 1200].iter().enumerate() {
            data[*idx] = 1.0 + i as f64;
        }
        let cube = psi
            .inverse(&Coefficients::from_vec(16, 16, 16, data).unwrap())
            .unwrap();
        let frame = apply_mosaic(&cube, &imec_4x4_pattern()).unwrap();
        let cfg = SolverConfig {
            sparsity: Some(4),
            ..Default::default()
        };
        let (out, trace) = cgiht_cs_from(&frame, &spec, &cfg, &cube).unwrap();
        assert_eq!(trace.iterations, 0);
        assert_eq!(trace.stop_reason, StopReason::Tolerance);
        assert!(out.relative_error(&cube).unwrap() < 1e-12);
    }

    #[test]
    fn residuals_non_increasing_and_sparse() {
        let cube = random_cube(16, 16, 2);
        let frame = apply_mosaic(&cube, &imec_4x4_pattern()).unwrap();
        let spec = TransformSpec::default();
        let cfg = SolverConfig {
            max_iters: 40,
            sparsity: Some(300),
            init: InitMethod::Wb,
            ..Default::default()
        };
        let (out, trace) = cgiht_cs(&frame, &spec, &cfg).unwrap();
        for w in trace.residuals.windows(2) {
            assert!(w[1] <= w[0], "{:?}", trace.residuals);
        }
        let coeffs = Psi::new(&spec, 16, 16, 16).unwrap().forward(&out).unwrap();
        assert!(coeffs.as_slice().iter().filter(|v| v.abs() > 1e-9).count() <= 300);
        let (_, rel) = sample_residual(&out, &frame).unwrap();
        assert!((rel - trace.final_residual()).abs() < 1e-9);
    }

    #[test]
    fn unconstrained_sparsity_interpolates() {
        let cube = random_cube(8, 8, 3);
        let frame = apply_mosaic(&cube, &imec_4x4_pattern()).unwrap();
        let cfg = SolverConfig {
            sparsity: Some(8 * 8 * 16),
            init: InitMethod::Zero,
            ..Default::default()
        };
        let (_, trace) = cgiht_cs(&frame, &TransformSpec::default(), &cfg).unwrap();
        assert_eq!(trace.stop_reason, StopReason::Tolerance);
        assert!(trace.final_residual() <= 1e-7);
    }

    #[test]
    fn bad_init_shape() {
        let cube = random_cube(8, 8, 4);
        let frame = apply_mosaic(&cube, &imec_4x4_pattern()).unwrap();
        let wrong = HyperCube::zeros(8, 4, 16).unwrap();
        let err = cgiht_cs_from(
            &frame,
            &TransformSpec::default(),
            &SolverConfig::default(),
            &wrong,
        )
        .unwrap_err();
        assert!(matches!(err, crate::error::Error::InvalidInit { .. }));
    }
}
