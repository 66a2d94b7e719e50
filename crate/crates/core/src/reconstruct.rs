//! One entry point for every demosaicing method.

use std::fmt;
use std::str::FromStr;

use crate::config::SolverConfig;
use crate::cube::HyperCube;
use crate::error::{Error, Result};
use crate::interp::{BorderMode, Interpolator};
use crate::mosaic::MosaicFrame;
use crate::solver::{
    asd_from, cgiht_cs_from, cgiht_mc_from, initial_estimate, McOptions, SolveTrace,
};
use crate::transform::TransformSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Wb,
    Sd,
    Id,
    /// Sparse recovery in `Ψ`.
    Cs,
    Asd,
    /// Rank-constrained CGIHT on the spectral unfolding.
    Cgiht,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Wb,
        Method::Sd,
        Method::Id,
        Method::Cs,
        Method::Asd,
        Method::Cgiht,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Wb => "wb",
            Method::Sd => "sd",
            Method::Id => "id",
            Method::Cs => "cs",
            Method::Asd => "asd",
            Method::Cgiht => "cgiht",
        }
    }

    pub fn is_iterative(self) -> bool {
        matches!(self, Method::Cs | Method::Asd | Method::Cgiht)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.name() == lower)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method {s:?}")))
    }
}

/// Everything a reconstruction can be tuned with.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReconstructOptions {
    pub solver: SolverConfig,
    pub transform: TransformSpec,
    pub border: BorderMode,
    pub mc: McOptions,
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub cube: HyperCube,
    /// Present for iterative methods.
    pub trace: Option<SolveTrace>,
}

pub fn reconstruct(
    frame: &MosaicFrame,
    method: Method,
    options: &ReconstructOptions,
) -> Result<Reconstruction> {
    let interp = |i: Interpolator| {
        Ok(Reconstruction {
            cube: i.demosaic(frame, options.border)?,
            trace: None,
        })
    };
    let solved = |(cube, trace): (HyperCube, SolveTrace)| Reconstruction {
        cube,
        trace: Some(trace),
    };
    match method {
        Method::Wb => interp(Interpolator::Wb),
        Method::Sd => interp(Interpolator::Sd),
        Method::Id => interp(Interpolator::Id),
        Method::Cs | Method::Asd | Method::Cgiht => {
            let cfg = &options.solver;
            let init = initial_estimate(frame, cfg.init, options.border)?;
            let out = match method {
                Method::Cs => cgiht_cs_from(frame, &options.transform, cfg, &init)?,
                Method::Asd => asd_from(frame, cfg, &init)?,
                _ => cgiht_mc_from(frame, cfg, &options.mc, &init)?,
            };
            Ok(solved(out))
        }
    }
}
