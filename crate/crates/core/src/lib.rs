//! Demosaicing of 4×4 snapshot-mosaic multispectral frames.
//!
//! A [`MosaicFrame`] holds one sample per pixel. Reconstruction either
//! interpolates it ([`Interpolator`]), recovers a cube that is sparse in the
//! wavelet ⊗ DCT transform [`Psi`] ([`cgiht_cs`]), or completes the low-rank
//! `(H·W) × B` spectral unfolding ([`asd`], [`cgiht_mc`]).

pub mod config;
pub mod cube;
pub mod error;
pub mod interp;
pub mod io;
pub mod metrics;
pub mod mosaic;
pub mod pattern;
pub mod reconstruct;
pub mod solver;
pub mod synth;
pub mod transform;

pub use config::{InitMethod, SolverConfig};
pub use cube::{HyperCube, Plane};
pub use error::{Error, ErrorKind, Result};
pub use interp::{BorderMode, Interpolator, WbKernel};
pub use metrics::{
    mse_map, psnr_band, psnr_summary, ssim_band, MetricsReport, PsnrSummary, SsimParams,
};
pub use mosaic::{apply_mosaic, embed, sample_residual, MosaicFrame};
pub use pattern::{imec_4x4_pattern, MosaicPattern};
pub use reconstruct::{reconstruct, Method, ReconstructOptions, Reconstruction};
pub use solver::{
    asd, cgiht_cs, cgiht_mc, initial_estimate, spectral_fold, spectral_unfold, McOptions,
    SolveTrace, StopReason,
};
pub use transform::{psi_forward, psi_inverse, Coefficients, Psi, TransformSpec};
