//! Numerical laboratory for interpolating predictors.
//!
//! The crate implements two worked constructions side by side:
//!
//! * [`linreg`] — overparameterized Gaussian linear regression with the
//!   minimum-norm interpolator, its denoised surrogate, an exact
//!   three-term decomposition of the generalization gap, a label-flip
//!   adversary that defeats uniform convergence, and the matching
//!   expected-risk bound expressions.
//! * [`hypercube`] — an interpolating classifier on `{0,1}^{2d}` with its
//!   antipodal adversary, a rerandomization (conditioning) surrogate,
//!   exact risk counting, Massart-style generalization bounds, and a
//!   double-descent bound-curve generator.
//!
//! [`spectra`] supplies the covariance-spectrum diagnostics (effective
//! ranks, critical index, benign-trend tables) both constructions rely
//! on, and [`mc`] provides deterministic, parallelism-invariant Monte
//! Carlo machinery shared by everything else.

pub mod hypercube;
pub mod linreg;
pub mod mc;
pub mod spectra;

pub(crate) mod table;

pub use mc::{derive_seed, run_mc, try_run_mc, McEstimate, McRng, RunPlan};
pub use spectra::{DimensionRule, Spectrum, SpectrumFamily, SpectrumLaw};
