//! The simulate, fit, estimate and bound pipeline behind `robext experiment`.

use crate::bounds::{clip_to_triangle, moments_for_pickands, sqrt_bound, Direction};
use crate::divergence::{divergence, estimate_divergence, DominatingMeasure};
use crate::inference::{bootstrap_pickands, fit_mle, pickands_curve, polar_topk, AngularSample, FitResult, RAW_ENDPOINT_TOL};
use crate::numerics::RngState;
use crate::spectral::{simulate_asym_logistic, to_pareto_margins, BivariateSample, Family, SpectralModel};
use crate::{Error, Result};

/// Angles this close to 0 or 1 count as endpoint observations when the
/// fitted family has point masses there.
pub const ATOM_ENDPOINT_TOL: f64 = 0.05;

/// Exceedances used for fitting.
pub const DEFAULT_K: usize = 500;
/// Bootstrap resamples.
pub const DEFAULT_BOOT: usize = 300;

/// One run of the experiment scheme.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    /// Asymmetric logistic law to simulate from, and the truth to compare to.
    pub true_model: Option<SpectralModel>,
    /// Observed data instead of a simulation.
    pub data: Option<BivariateSample>,
    pub n: usize,
    pub k: usize,
    pub fit_family: Family,
    pub mu: DominatingMeasure,
    pub boot: usize,
    pub z: Vec<f64>,
    pub seed: u64,
    /// Radius for the robust bounds; estimated from the data when absent.
    pub delta: Option<f64>,
    pub bandwidth: Option<f64>,
    /// Endpoint tolerance for the angles; by default [`ATOM_ENDPOINT_TOL`]
    /// for families with point masses and [`RAW_ENDPOINT_TOL`] otherwise.
    pub endpoint_tol: Option<f64>,
}

/// Default Pickands grid of the experiment plots.
pub fn default_z_grid() -> Vec<f64> {
    (1..=49).map(|i| i as f64 / 50.0).collect()
}

impl ExperimentSpec {
    /// The four experiments of the illustration.
    pub fn preset(id: u8, seed: u64) -> Result<Self> {
        let (truth, n, fam, mu) = match id {
            1 => ((0.4, 0.7, 1.0), 20_000, Family::ExtremalT, DominatingMeasure::ReferenceP),
            2 => ((0.5, 1.0, 1.0), 20_000, Family::HuslerReiss, DominatingMeasure::Lebesgue),
            3 => ((0.5, 1.0, 1.0), 2_000, Family::ExtremalT, DominatingMeasure::ReferenceP),
            4 => ((0.5, 0.9, 0.5), 20_000, Family::AsymmetricLogistic, DominatingMeasure::ReferenceP),
            _ => return Err(Error::InvalidInput(format!("experiment id {id} is not one of 1, 2, 3, 4"))),
        };
        Ok(Self {
            true_model: Some(SpectralModel::asymmetric_logistic(truth.0, truth.1, truth.2)?),
            data: None,
            n,
            k: DEFAULT_K,
            fit_family: fam,
            mu,
            boot: DEFAULT_BOOT,
            z: default_z_grid(),
            seed,
            delta: None,
            bandwidth: None,
            endpoint_tol: None,
        })
    }

    pub fn endpoint_tol(&self) -> f64 {
        self.endpoint_tol.unwrap_or(if self.fit_family.has_atoms() {
            ATOM_ENDPOINT_TOL
        } else {
            RAW_ENDPOINT_TOL
        })
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub z: Vec<f64>,
    /// Empty without a true model.
    pub a_true: Vec<f64>,
    pub a_fit: Vec<f64>,
    pub boot_lo: Vec<f64>,
    pub boot_hi: Vec<f64>,
    pub robust_lo: Vec<f64>,
    pub robust_hi: Vec<f64>,
    pub angles: AngularSample,
    pub fit: FitResult,
    pub delta_hat: f64,
    /// NaN without a true model.
    pub delta_true: f64,
    /// Radius used for the robust bounds.
    pub delta_used: f64,
    pub boot_failures: usize,
    pub warnings: Vec<String>,
}

impl ExperimentResult {
    /// Whether the true curve lies inside the robust band at every grid point.
    pub fn robust_contains_truth(&self) -> bool {
        !self.a_true.is_empty()
            && self
                .a_true
                .iter()
                .zip(self.robust_lo.iter().zip(&self.robust_hi))
                .all(|(a, (l, h))| *l <= a + 1e-12 && *a <= h + 1e-12)
    }

    /// Largest ratio of robust to bootstrap band width (or its inverse).
    pub fn width_ratio(&self) -> f64 {
        let mut worst: f64 = 1.0;
        for i in 0..self.z.len() {
            let r = self.robust_hi[i] - self.robust_lo[i];
            let b = self.boot_hi[i] - self.boot_lo[i];
            if r <= 1e-12 && b <= 1e-12 {
                continue;
            }
            worst = worst.max(r / b).max(b / r);
        }
        worst
    }
}

/// Square-root bounds at radius `delta`, clipped to the Pickands triangle.
pub fn robust_band(model: &SpectralModel, z: &[f64], mu: &DominatingMeasure, delta: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut lo = Vec::with_capacity(z.len());
    let mut hi = Vec::with_capacity(z.len());
    for &zz in z {
        if !delta.is_finite() {
            lo.push(clip_to_triangle(zz, f64::NEG_INFINITY));
            hi.push(clip_to_triangle(zz, f64::INFINITY));
            continue;
        }
        let ms = moments_for_pickands(model, zz, mu)?;
        lo.push(clip_to_triangle(zz, sqrt_bound(&ms, delta, Direction::Lower)));
        hi.push(clip_to_triangle(zz, sqrt_bound(&ms, delta, Direction::Upper)));
    }
    Ok((lo, hi))
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let mut warnings = Vec::new();
    let sample = match (&spec.data, &spec.true_model) {
        (Some(d), _) => d.clone(),
        (None, Some(SpectralModel::AsymmetricLogistic { a, b1, b2 })) => {
            to_pareto_margins(&simulate_asym_logistic(*a, *b1, *b2, spec.n, RngState::new(spec.seed, 0))?)?
        }
        (None, Some(m)) => {
            return Err(Error::InvalidInput(format!("can only simulate from an asymmetric logistic law, not {m}")))
        }
        (None, None) => return Err(Error::InvalidInput("need a true model or data".into())),
    };
    let angles = polar_topk(&sample, spec.k, spec.endpoint_tol())?;
    let fit = fit_mle(spec.fit_family, &angles)?;
    let a_fit = pickands_curve(&fit.model, &spec.z)?;
    let a_true = match &spec.true_model {
        Some(m) => pickands_curve(m, &spec.z)?,
        None => Vec::new(),
    };
    let delta_hat = estimate_divergence(&angles, &fit.model, &spec.mu, spec.bandwidth)?;
    let delta_true = match &spec.true_model {
        Some(m) => divergence(m, &fit.model, &spec.mu)?,
        None => f64::NAN,
    };
    if spec.mu.is_reference() && (delta_hat.is_infinite() || delta_true.is_infinite()) {
        warnings.push(format!(
            "divergence from {} is infinite under mu=P; consider --mu leb",
            fit.model
        ));
    }
    let delta_used = spec.delta.unwrap_or(delta_hat);
    let (robust_lo, robust_hi) = robust_band(&fit.model, &spec.z, &spec.mu, delta_used)?;
    let env = bootstrap_pickands(&angles, spec.fit_family, spec.boot, &spec.z, RngState::new(spec.seed, 1))?;
    if env.failures > 0 {
        warnings.push(format!("{} of {} bootstrap refits failed", env.failures, spec.boot));
    }
    Ok(ExperimentResult {
        z: spec.z.clone(),
        a_true,
        a_fit,
        boot_lo: env.lower,
        boot_hi: env.upper,
        robust_lo,
        robust_hi,
        angles,
        fit,
        delta_hat,
        delta_true,
        delta_used,
        boot_failures: env.failures,
        warnings,
    })
}
