//! Solver configuration shared by the sparse and low-rank reconstructions.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Default iteration cap.
pub const DEFAULT_MAX_ITERS: usize = 500;
/// Default stopping tolerance on `‖P_Ω X − y‖₂ / ‖y‖₂`.
pub const DEFAULT_REL_TOL: f64 = 1e-7;
/// Default rank of the spectral unfolding.
pub const DEFAULT_RANK: usize = 4;
/// Default sparsity as a fraction of the coefficient count.
pub const DEFAULT_SPARSITY_FRACTION: f64 = 0.10;

/// Starting estimate handed to an iterative solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InitMethod {
    Zero,
    Wb,
    Sd,
    Id,
}

impl InitMethod {
    pub fn name(self) -> &'static str {
        match self {
            InitMethod::Zero => "zero",
            InitMethod::Wb => "wb",
            InitMethod::Sd => "sd",
            InitMethod::Id => "id",
        }
    }
}

impl fmt::Display for InitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InitMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" => Ok(InitMethod::Zero),
            "wb" => Ok(InitMethod::Wb),
            "sd" => Ok(InitMethod::Sd),
            "id" => Ok(InitMethod::Id),
            other => Err(Error::InvalidConfig(format!(
                "unknown init method {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub rel_tol: f64,
    /// Target rank `r` of the spectral unfolding.
    pub rank: usize,
    /// Number of retained transform coefficients `k`. `None` means 10% of the
    /// coefficient count, resolved against the cube size at solve time.
    pub sparsity: Option<usize>,
    pub init: InitMethod,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: DEFAULT_MAX_ITERS,
            rel_tol: DEFAULT_REL_TOL,
            rank: DEFAULT_RANK,
            sparsity: None,
            init: InitMethod::Sd,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if self.rank == 0 {
            return Err(Error::InvalidConfig("rank must be at least 1".into()));
        }
        if self.sparsity == Some(0) {
            return Err(Error::InvalidConfig("sparsity must be at least 1".into()));
        }
        Ok(())
    }

    /// Sparsity for a problem with `total` coefficients.
    pub fn resolved_sparsity(&self, total: usize) -> usize {
        self.sparsity
            .unwrap_or_else(|| (DEFAULT_SPARSITY_FRACTION * total as f64).ceil() as usize)
            .max(1)
    }
}
