//! Low-rank completion of the `(H·W) × B` spectral unfolding.
//!
//! Both solvers start from the rank-`r` projection of the unfolded initial
//! cube. An all-zero initial cube is replaced by `P_Ωᵀ y`, which is the exact
//! steepest-descent step from zero.

use nalgebra::DMatrix;

use crate::config::SolverConfig;
use crate::cube::HyperCube;
use crate::error::{Error, Result};
use crate::interp::BorderMode;
use crate::mosaic::{relative_norm, MosaicFrame};

use super::lowrank::{
    project_rank, spectral_fold, spectral_unfold, truncated_svd, Observations, SpectralUnfolding,
};
use super::{
    check_init, dot, initial_estimate, norm_sq, Monitor, SolveTrace, BACKTRACK_STEPS, MIN_CURVATURE,
};

/// Accepted step: projected iterate, its row space and relative residual.
type Candidate = (DMatrix<f64>, DMatrix<f64>, f64);

/// Tuning for [`cgiht_mc_from`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    /// The conjugate direction is restarted when the sine of the largest
    /// principal angle between successive row spaces exceeds this value.
    pub restart_sin: f64,
}

impl Default for McOptions {
    fn default() -> Self {
        Self { restart_sin: 1e-3 }
    }
}

fn check_rank(config: &SolverConfig, bands: usize) -> Result<()> {
    config.validate()?;
    if config.rank > bands {
        return Err(Error::RankOutOfRange {
            rank: config.rank,
            bands,
        });
    }
    Ok(())
}

/// `P_Ωᵀ y` if `init` is identically zero, else `init`.
fn starting_matrix(obs: &Observations, init: &DMatrix<f64>) -> DMatrix<f64> {
    if init.iter().all(|&v| v == 0.0) {
        let mut x = DMatrix::zeros(obs.rows(), obs.cols());
        obs.scatter(obs.values(), &mut x);
        x
    } else {
        init.clone()
    }
}

fn residual_into(obs: &Observations, x: &DMatrix<f64>, out: &mut [f64]) {
    obs.sample(x, out);
    for (o, &y) in out.iter_mut().zip(obs.values()) {
        *o = y - *o;
    }
}

fn prepare(
    frame: &MosaicFrame,
    config: &SolverConfig,
) -> Result<(Observations, SpectralUnfolding)> {
    check_rank(config, frame.bands())?;
    let init = initial_estimate(frame, config.init, BorderMode::Normalized)?;
    Ok((Observations::from_frame(frame), spectral_unfold(&init)))
}

fn fold(frame: &MosaicFrame, x: DMatrix<f64>) -> Result<HyperCube> {
    spectral_fold(&SpectralUnfolding::new(frame.height(), frame.width(), x)?)
}

/// Alternating steepest descent on `X = L·R`, initialized from `config.init`.
pub fn asd(frame: &MosaicFrame, config: &SolverConfig) -> Result<(HyperCube, SolveTrace)> {
    let (obs, init) = prepare(frame, config)?;
    let (x, trace) = asd_observed(&obs, init.matrix(), config)?;
    Ok((fold(frame, x)?, trace))
}

/// [`asd`] from an explicit initial cube.
pub fn asd_from(
    frame: &MosaicFrame,
    config: &SolverConfig,
    init: &HyperCube,
) -> Result<(HyperCube, SolveTrace)> {
    check_rank(config, frame.bands())?;
    check_init(frame, init)?;
    let obs = Observations::from_frame(frame);
    let (x, trace) = asd_observed(&obs, spectral_unfold(init).matrix(), config)?;
    Ok((fold(frame, x)?, trace))
}

/// ASD for an arbitrary observation set. Returns the completed matrix.
pub fn asd_observed(
    obs: &Observations,
    init: &DMatrix<f64>,
    config: &SolverConfig,
) -> Result<(DMatrix<f64>, SolveTrace)> {
    check_rank(config, obs.cols())?;
    if init.shape() != (obs.rows(), obs.cols()) {
        return Err(Error::DimensionMismatch {
            expected: obs.rows() * obs.cols(),
            got: init.len(),
        });
    }
    let r = config.rank;
    let (n, b) = (obs.rows(), obs.cols());
    let y_norm = obs.norm();

    let x0 = starting_matrix(obs, init);
    let svd = truncated_svd(&x0, r)?;
    let mut left = &x0 * &svd.right;
    let mut right = svd.right.transpose();

    let m = obs.len();
    let mut z = vec![0.0; m];
    let mut q = vec![0.0; m];
    let entries: Vec<(usize, usize, usize)> = obs.iter().collect();

    let residual = |left: &DMatrix<f64>, right: &DMatrix<f64>, z: &mut [f64]| {
        let (l, rt) = (left.as_slice(), right.as_slice());
        for &(i, c, j) in &entries {
            let v: f64 = (0..r).map(|t| l[i + t * n] * rt[t + c * r]).sum();
            z[j] = obs.values()[j] - v;
        }
    };

    residual(&left, &right, &mut z);
    let mut monitor = Monitor::new(config);
    monitor.record_objective(norm_sq(&z));
    let mut stop = monitor.push(relative_norm(norm_sq(&z).sqrt(), y_norm)?)?;

    let mut grad_l = DMatrix::zeros(n, r);
    let mut grad_r = DMatrix::zeros(r, b);
    while stop.is_none() {
        // Half-step in L: ∇ = P_Ωᵀ(z) Rᵀ.
        grad_l.fill(0.0);
        {
            let (gl, rt) = (grad_l.as_mut_slice(), right.as_slice());
            for &(i, c, j) in &entries {
                for t in 0..r {
                    gl[i + t * n] += z[j] * rt[t + c * r];
                }
            }
            for &(i, c, j) in &entries {
                q[j] = (0..r).map(|t| gl[i + t * n] * rt[t + c * r]).sum();
            }
        }
        let den = norm_sq(&q);
        if den > MIN_CURVATURE {
            left += grad_l.scale(grad_l.norm_squared() / den);
            residual(&left, &right, &mut z);
        }
        monitor.record_objective(norm_sq(&z));

        // Half-step in R: ∇ = Lᵀ P_Ωᵀ(z).
        grad_r.fill(0.0);
        {
            let (gr, l) = (grad_r.as_mut_slice(), left.as_slice());
            for &(i, c, j) in &entries {
                for t in 0..r {
                    gr[t + c * r] += z[j] * l[i + t * n];
                }
            }
            for &(i, c, j) in &entries {
                q[j] = (0..r).map(|t| l[i + t * n] * gr[t + c * r]).sum();
            }
        }
        let den = norm_sq(&q);
        if den > MIN_CURVATURE {
            right += grad_r.scale(grad_r.norm_squared() / den);
            residual(&left, &right, &mut z);
        }
        monitor.record_objective(norm_sq(&z));

        stop = monitor.push(relative_norm(norm_sq(&z).sqrt(), y_norm)?)?;
    }
    let trace = monitor.trace(stop.expect("loop exits on a stop reason"));
    Ok((left * right, trace))
}

/// Conjugate-gradient iterative hard thresholding on the rank-`r` set,
/// initialized from `config.init`.
pub fn cgiht_mc(frame: &MosaicFrame, config: &SolverConfig) -> Result<(HyperCube, SolveTrace)> {
    let (obs, init) = prepare(frame, config)?;
    let (x, trace) = cgiht_mc_observed(&obs, init.matrix(), config, &McOptions::default())?;
    Ok((fold(frame, x)?, trace))
}

/// [`cgiht_mc`] from an explicit initial cube.
pub fn cgiht_mc_from(
    frame: &MosaicFrame,
    config: &SolverConfig,
    options: &McOptions,
    init: &HyperCube,
) -> Result<(HyperCube, SolveTrace)> {
    check_rank(config, frame.bands())?;
    check_init(frame, init)?;
    let obs = Observations::from_frame(frame);
    let (x, trace) = cgiht_mc_observed(&obs, spectral_unfold(init).matrix(), config, options)?;
    Ok((fold(frame, x)?, trace))
}

/// Sine of the largest principal angle between two orthonormal bases.
fn max_angle_sin(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let m = a.transpose() * b;
    let smallest = m
        .singular_values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    (1.0 - smallest.min(1.0).powi(2)).max(0.0).sqrt()
}

/// CGIHT for an arbitrary observation set. Returns the completed matrix.
pub fn cgiht_mc_observed(
    obs: &Observations,
    init: &DMatrix<f64>,
    config: &SolverConfig,
    options: &McOptions,
) -> Result<(DMatrix<f64>, SolveTrace)> {
    check_rank(config, obs.cols())?;
    if init.shape() != (obs.rows(), obs.cols()) {
        return Err(Error::DimensionMismatch {
            expected: obs.rows() * obs.cols(),
            got: init.len(),
        });
    }
    let r = config.rank;
    let (n, b) = (obs.rows(), obs.cols());
    let m = obs.len();
    let y_norm = obs.norm();

    let (mut x, mut v) = project_rank(&starting_matrix(obs, init), r)?;
    let mut z = vec![0.0; m];
    residual_into(obs, &x, &mut z);
    let mut rel = relative_norm(norm_sq(&z).sqrt(), y_norm)?;
    let mut monitor = Monitor::new(config);
    let mut stop = monitor.push(rel)?;

    let mut grad = DMatrix::zeros(n, b);
    let mut dir = DMatrix::zeros(n, b);
    let mut a_gv = vec![0.0; m];
    let mut a_pv = vec![0.0; m];
    let mut cand_z = vec![0.0; m];
    // Row space the current direction was built on.
    let mut dir_space: Option<DMatrix<f64>> = None;

    while stop.is_none() {
        obs.scatter(&z, &mut grad);
        let proj = &v * v.transpose();
        let gv = &grad * &proj;
        obs.sample(&gv, &mut a_gv);
        let gv_sq = gv.norm_squared();
        let agv_sq = norm_sq(&a_gv);

        let restart = match &dir_space {
            Some(prev) => max_angle_sin(prev, &v) > options.restart_sin,
            None => true,
        };

        let mut cg_alpha = None;
        if restart {
            if agv_sq > MIN_CURVATURE {
                dir.copy_from(&grad);
                cg_alpha = Some(gv_sq / agv_sq);
            }
        } else {
            let pv_prev = &dir * &proj;
            obs.sample(&pv_prev, &mut a_pv);
            let app = norm_sq(&a_pv);
            let beta = if app > MIN_CURVATURE {
                -dot(&a_gv, &a_pv) / app
            } else {
                0.0
            };
            dir = &grad + dir.scale(beta);
            let pv = &gv + pv_prev.scale(beta);
            for (a, &g) in a_pv.iter_mut().zip(&a_gv) {
                *a = g + beta * *a;
            }
            let den = norm_sq(&a_pv);
            let num = gv.dot(&pv);
            if den > MIN_CURVATURE && num > 0.0 {
                cg_alpha = Some(num / den);
            }
        }

        let try_step =
            |d: &DMatrix<f64>, alpha: f64, cz: &mut [f64]| -> Result<Option<Candidate>> {
                let (xc, vc) = project_rank(&(&x + d.scale(alpha)), r)?;
                residual_into(obs, &xc, cz);
                let rc = relative_norm(norm_sq(cz).sqrt(), y_norm)?;
                if !rc.is_finite() {
                    return Ok(Some((xc, vc, rc)));
                }
                Ok((rc <= rel).then_some((xc, vc, rc)))
            };

        let mut accepted = None;
        if let Some(alpha) = cg_alpha {
            accepted = try_step(&dir, alpha, &mut cand_z)?;
        }
        if accepted.is_some() {
            dir_space = Some(v.clone());
        } else {
            dir_space = None;
            if agv_sq > MIN_CURVATURE {
                let mut alpha = gv_sq / agv_sq;
                for _ in 0..=BACKTRACK_STEPS {
                    accepted = try_step(&grad, alpha, &mut cand_z)?;
                    if accepted.is_some() {
                        break;
                    }
                    alpha *= 0.5;
                }
            }
        }
        if let Some((xc, vc, rc)) = accepted {
            x = xc;
            v = vc;
            rel = rc;
            std::mem::swap(&mut z, &mut cand_z);
        }
        stop = monitor.push(rel)?;
    }
    let trace = monitor.trace(stop.expect("loop exits on a stop reason"));
    Ok((x, trace))
}
