//! Iterative reconstruction: hard-thresholded sparse recovery in `Ψ` and
//! low-rank completion of the spectral unfolding.
//!
//! Every solver stops as soon as `‖P_Ω X⁽ᵗ⁾ − y‖₂ / ‖y‖₂ ≤ rel_tol`, after
//! `max_iters` iterations, or when the relative residual has moved by less
//! than [`STALL_DELTA`] for [`STALL_WINDOW`] consecutive iterations.

pub mod cs;
pub mod lowrank;
pub mod mc;

pub use cs::{cgiht_cs, cgiht_cs_from};
pub use lowrank::{
    gram, project_rank, spectral_fold, spectral_unfold, truncated_svd, LowRankFactors,
    Observations, SpectralUnfolding, TruncatedSvd,
};
pub use mc::{asd, asd_from, asd_observed, cgiht_mc, cgiht_mc_from, cgiht_mc_observed, McOptions};

use crate::config::{InitMethod, SolverConfig};
use crate::cube::HyperCube;
use crate::error::{Error, Result};
use crate::interp::{BorderMode, Interpolator};
use crate::mosaic::MosaicFrame;

/// Residual change below which an iteration counts as stalled.
pub const STALL_DELTA: f64 = 1e-12;
/// Consecutive stalled iterations that end a solve.
pub const STALL_WINDOW: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Tolerance,
    MaxIters,
    Stalled,
}

/// Per-solve diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace {
    /// Relative residual before the first iteration, then after each one.
    pub residuals: Vec<f64>,
    /// Completed iterations (`residuals.len() − 1`).
    pub iterations: usize,
    pub stop_reason: StopReason,
    /// Objective `‖P_Ω(LR) − y‖²` after every ASD half-step, starting with the
    /// initial value. Empty for the other solvers.
    pub objectives: Vec<f64>,
}

impl SolveTrace {
    pub fn final_residual(&self) -> f64 {
        *self
            .residuals
            .last()
            .expect("trace always holds the initial residual")
    }
}

/// Shared stopping-rule bookkeeping.
pub(crate) struct Monitor {
    max_iters: usize,
    rel_tol: f64,
    residuals: Vec<f64>,
    objectives: Vec<f64>,
    stalled: usize,
}

impl Monitor {
    pub(crate) fn new(config: &SolverConfig) -> Self {
        Self {
            max_iters: config.max_iters,
            rel_tol: config.rel_tol,
            residuals: Vec::new(),
            objectives: Vec::new(),
            stalled: 0,
        }
    }

    pub(crate) fn iterations(&self) -> usize {
        self.residuals.len().saturating_sub(1)
    }

    pub(crate) fn record_objective(&mut self, value: f64) {
        self.objectives.push(value);
    }

    /// Records a residual; returns the stop reason if the solve is over.
    pub(crate) fn push(&mut self, rel: f64) -> Result<Option<StopReason>> {
        if !rel.is_finite() {
            self.residuals.push(rel);
            return Err(Error::NonFinite {
                trace: Box::new(self.trace(StopReason::Stalled)),
            });
        }
        if let Some(&prev) = self.residuals.last() {
            if (prev - rel).abs() < STALL_DELTA {
                self.stalled += 1;
            } else {
                self.stalled = 0;
            }
        }
        self.residuals.push(rel);
        let reason = if rel <= self.rel_tol {
            Some(StopReason::Tolerance)
        } else if self.iterations() >= self.max_iters {
            Some(StopReason::MaxIters)
        } else if self.stalled >= STALL_WINDOW {
            Some(StopReason::Stalled)
        } else {
            None
        };
        Ok(reason)
    }

    pub(crate) fn trace(&self, stop_reason: StopReason) -> SolveTrace {
        SolveTrace {
            residuals: self.residuals.clone(),
            iterations: self.iterations(),
            stop_reason,
            objectives: self.objectives.clone(),
        }
    }
}

/// Starting cube for an iterative solver.
pub fn initial_estimate(
    frame: &MosaicFrame,
    init: InitMethod,
    border: BorderMode,
) -> Result<HyperCube> {
    match init {
        InitMethod::Zero => {
            let (h, w, b) = frame.cube_shape();
            HyperCube::zeros(h, w, b)
        }
        InitMethod::Wb => Interpolator::Wb.demosaic(frame, border),
        InitMethod::Sd => Interpolator::Sd.demosaic(frame, border),
        InitMethod::Id => Interpolator::Id.demosaic(frame, border),
    }
}

pub(crate) fn check_init(frame: &MosaicFrame, init: &HyperCube) -> Result<()> {
    if init.shape() != frame.cube_shape() {
        return Err(Error::InvalidInit {
            expected: frame.cube_shape(),
            got: init.shape(),
        });
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// Smallest denominator accepted for an exact line-search step.
pub(crate) const MIN_CURVATURE: f64 = 1e-30;

/// Halvings tried after both the conjugate and the steepest step fail to
/// reduce the residual.
pub(crate) const BACKTRACK_STEPS: usize = 30;
