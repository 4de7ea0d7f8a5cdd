//! Shared numeric kernel: integration against measures with atoms, root
//! finding, derivative-free minimisation, special functions and seeded
//! random streams.

pub mod measure;
pub mod optimize;
pub mod quadrature;
pub mod rng;
pub mod roots;
pub mod special;

pub use measure::{Atom, AtomicMeasure, DensityFn};
pub use optimize::{golden_section, nelder_mead, Minimum};
pub use quadrature::{
    integrate, integrate_interval, integrate_outcome, integrate_pair_vec, integrate_vec, integrate_with_breaks,
    QuadOutcome, DEFAULT_TOL,
};
pub use rng::{halton, sample_positive_stable, sample_positive_stable_at, RngState};
pub use roots::{bisect, brent, solve_system, solve_system_multistart, DEFAULT_ROOT_TOL};
