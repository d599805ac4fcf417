//! Spectral fluctuation statistics for incomplete level sequences of chaotic
//! systems with partially violated time-reversal invariance.
//!
//! The crate covers the whole pipeline:
//!
//! - [`spectra`]: raw levels, Weyl and polynomial unfolding, random decimation,
//!   and the S-parameter cross-correlation coefficient.
//! - [`rmt`]: GOE→GUE crossover random matrices, eigenvalues, and reproducible
//!   ensembles.
//! - [`estimators`]: empirical spacing distributions, number variance,
//!   rigidity, and the δ_q power spectrum.
//! - [`theory`]: the crossover spacing distribution, the two-point cluster
//!   function and everything derived from it, including the missing-level
//!   transforms.
//! - [`fitting`]: estimation of the observed fraction Φ, the crossover
//!   strength ξ, and the γ s^μ e^{−χ s²} spacing fits.
//!
//! Curves travel between the stages as [`StatCurve`] values, which serialize to
//! a small CSV format understood by the command-line tool.

#![forbid(unsafe_code)]
// `!(x > 0.0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curve;
pub mod error;
pub mod estimators;
pub mod fitting;
pub mod io;
pub mod numeric;
pub mod rmt;
pub mod special;
pub mod spectra;
pub mod theory;

pub use curve::{CurveMeta, CurvePoint, StatCurve, StatKind};
pub use error::{Error, Result};
pub use rmt::{CrossoverParams, EnsembleConfig, HermitianMatrix, Unfolding};
pub use spectra::{
    BilliardGeometry, LevelSequence, LevelUnit, PerimeterSign, Provenance, SParameterTrace,
    UnfoldedSpectrum,
};
