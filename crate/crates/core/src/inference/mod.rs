//! Polar decomposition of bivariate data, maximum likelihood fitting of
//! spectral families, bootstrap envelopes and bounds within a family.

mod bootstrap;
mod class;
mod fit;

pub use bootstrap::{bootstrap_pickands, pickands_curve, Envelope};
pub use class::{model_class_bounds, ClassBound};
pub use fit::{fit_mle, fit_mle_from, log_likelihood, FitResult};

use crate::spectral::BivariateSample;
use crate::{Error, Result};

/// Default tolerance for classifying raw angles as endpoint atoms.
pub const RAW_ENDPOINT_TOL: f64 = 1e-6;

/// Angles of the `k` observations with the largest `L₁` radii.
///
/// Angles within `endpoint_tol` of 0 or 1 are treated as observations of
/// the endpoint atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularSample {
    pub angles: Vec<f64>,
    pub n_total: usize,
    /// Largest radius not selected.
    pub threshold: f64,
    pub endpoint_tol: f64,
}

impl AngularSample {
    /// A sample of angles observed directly (no radii).
    pub fn from_angles(angles: Vec<f64>, endpoint_tol: f64) -> Result<Self> {
        if let Some(a) = angles.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::InvalidInput(format!("angle {a} outside [0, 1]")));
        }
        let n = angles.len();
        Ok(Self {
            angles,
            n_total: n,
            threshold: 0.0,
            endpoint_tol,
        })
    }

    pub fn with_endpoint_tol(mut self, tol: f64) -> Self {
        self.endpoint_tol = tol;
        self
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn k(&self) -> usize {
        self.angles.len()
    }

    pub fn is_atom0(&self, w: f64) -> bool {
        w <= self.endpoint_tol
    }

    pub fn is_atom1(&self, w: f64) -> bool {
        w >= 1.0 - self.endpoint_tol
    }

    pub fn count0(&self) -> usize {
        self.angles.iter().filter(|&&w| self.is_atom0(w)).count()
    }

    pub fn count1(&self) -> usize {
        self.angles.iter().filter(|&&w| self.is_atom1(w)).count()
    }

    /// Angles not attributed to an endpoint atom.
    pub fn interior(&self) -> Vec<f64> {
        self.angles
            .iter()
            .copied()
            .filter(|&w| !self.is_atom0(w) && !self.is_atom1(w))
            .collect()
    }

    /// Same sample with angles replaced (for resampling).
    pub fn with_angles(&self, angles: Vec<f64>) -> Self {
        Self {
            angles,
            ..self.clone()
        }
    }

    pub fn mean(&self) -> f64 {
        self.angles.iter().sum::<f64>() / self.angles.len() as f64
    }
}

/// Radii `z₁ + z₂` and angles `z₁/(z₁ + z₂)`; keeps the `k` rows with the
/// largest radii, in their original order.
pub fn polar_topk(s: &BivariateSample, k: usize, endpoint_tol: f64) -> Result<AngularSample> {
    let n = s.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidInput(format!("need 0 < k < n, got k={k}, n={n}")));
    }
    let radii: Vec<f64> = s.rows.iter().map(|r| r[0] + r[1]).collect();
    if let Some(i) = radii.iter().position(|r| !(*r > 0.0)) {
        return Err(Error::InvalidInput(format!("row {i} has zero radius")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    // descending radius, ties broken by row index
    order.sort_by(|&a, &b| radii[b].total_cmp(&radii[a]).then(a.cmp(&b)));
    let threshold = radii[order[k]];
    let mut keep: Vec<usize> = order[..k].to_vec();
    keep.sort_unstable();
    let angles = keep
        .iter()
        .map(|&i| {
            let r = s.rows[i];
            if r[0].is_infinite() && r[1].is_infinite() {
                0.5
            } else if r[0].is_infinite() {
                1.0
            } else if r[1].is_infinite() {
                0.0
            } else {
                r[0] / radii[i]
            }
        })
        .collect();
    Ok(AngularSample {
        angles,
        n_total: n,
        threshold,
        endpoint_tol,
    })
}
