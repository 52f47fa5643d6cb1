//! Inference of generalized Gibbs states from finite-sample measurement data.
//!
//! The crate is organised bottom-up:
//!
//! - [`state_space`]: Hermitian operators, density operators, entropies and the
//!   canonical-correlation (Kubo-Mori-Bogoliubov) inner product.
//! - [`levels`]: levels of description, i.e. spans of relevant observables and the
//!   identity, with coarse-graining order, complementation, union, intersection and
//!   tensor composition.
//! - [`gibbs`]: points on Gibbs manifolds, the coarse-graining projection solved by a
//!   damped Newton method on the convex dual, the correlation-matrix metric, and
//!   closed forms for the Bloch sphere.
//! - [`inference`]: chi-squared statistics, the evidence procedure, posterior
//!   estimation with error bars, and Bayesian comparison of levels of description.
//!
//! Classical systems are represented by diagonal operators and take vector fast
//! paths throughout; quantum systems use dense complex matrices.

#![forbid(unsafe_code)]

pub mod error;
pub mod gibbs;
pub mod inference;
pub mod levels;
pub mod state_space;

pub use error::{Error, Result};
pub use gibbs::{BlochVector, GibbsModel, VolumeCoords};
pub use inference::{
    AlphaPolicy, AlphaSource, ComparisonReport, EntropicPrior, EvidenceEstimate, ExperimentData, PosteriorEstimate,
    SignificanceReport, Verdict,
};
pub use levels::{LevelOfDescription, Metric};
pub use state_space::{DensityOperator, HermitianOperator, Spectrum, StateKind, C64};
