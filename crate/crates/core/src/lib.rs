//! Robust bounds on extremal dependence.
//!
//! The crate computes worst- and best-case values of tail dependence
//! summaries (Pickands' dependence function, extremal coefficient, tail
//! exceedance probabilities, asymptotic portfolio Value-at-Risk) over all
//! spectral distributions within a divergence ball around a fitted model,
//! subject to the moment constraints every spectral distribution must obey.
//!
//! Module map:
//!
//! - [`numerics`]: quadrature against densities with atoms, damped Newton
//!   root finding, Nelder–Mead, seeded random streams, special functions.
//! - [`spectral`]: parametric and empirical spectral models on `[0, 1]`,
//!   Pickands' function, sampling and max-stable simulation.
//! - [`divergence`]: the weighted `L²` divergence between spectral models and
//!   its plug-in estimate from angular data.
//! - [`bounds`]: square-root bounds, exactness and degeneracy thresholds,
//!   exact bounds via the optimality conditions, Rényi and Kullback–Leibler
//!   variants.
//! - [`inference`]: polar decomposition, maximum likelihood fitting,
//!   bootstrap envelopes and bounds within a parametric class.
//! - [`portfolio`]: Value-at-Risk ratio bounds for heavy-tailed portfolios.
//! - [`cli`]: the batch command-line front end.

pub mod bounds;
pub mod cli;
pub mod divergence;
mod error;
pub mod inference;
pub mod numerics;
pub mod portfolio;
pub mod spectral;

pub use error::{Error, Result};
