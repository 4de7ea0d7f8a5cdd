use crate::numerics::quadrature::{quad_vec, MAX_SUBDIVISIONS};
use crate::numerics::{halton, nelder_mead};
use crate::spectral::{Family, SpectralModel};
use crate::{Error, Result};

use super::AngularSample;

const RESTARTS: u64 = 5;
const ET_RHO_MAX: f64 = 0.999;
const ET_A_RANGE: (f64, f64) = (0.05, 50.0);
const HR_LAMBDA_RANGE: (f64, f64) = (1e-3, 1e3);

/// Fitted model and its log-likelihood.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: SpectralModel,
    pub log_likelihood: f64,
    pub evaluations: usize,
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn expit(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Unconstrained coordinates → family parameters.
fn to_params(family: Family, t: &[f64]) -> Vec<f64> {
    match family {
        Family::HuslerReiss => vec![t[0].exp().clamp(HR_LAMBDA_RANGE.0, HR_LAMBDA_RANGE.1)],
        Family::AsymmetricLogistic => vec![
            expit(t[0]).clamp(1e-6, 1.0 - 1e-6),
            expit(t[1]),
            expit(t[2]),
        ],
        Family::ExtremalT => {
            let (lo, hi) = (ET_A_RANGE.0.ln(), ET_A_RANGE.1.ln());
            vec![ET_RHO_MAX * t[0].tanh(), (lo + (hi - lo) * expit(t[1])).exp()]
        }
    }
}

fn from_params(family: Family, p: &[f64]) -> Vec<f64> {
    let clamp01 = |x: f64| x.clamp(1e-9, 1.0 - 1e-9);
    match family {
        Family::HuslerReiss => vec![p[0].ln()],
        Family::AsymmetricLogistic => vec![logit(clamp01(p[0])), logit(clamp01(p[1])), logit(clamp01(p[2]))],
        Family::ExtremalT => {
            let (lo, hi) = (ET_A_RANGE.0.ln(), ET_A_RANGE.1.ln());
            vec![
                (p[0] / ET_RHO_MAX).clamp(-1.0 + 1e-12, 1.0 - 1e-12).atanh(),
                logit(clamp01((p[1].ln() - lo) / (hi - lo))),
            ]
        }
    }
}

/// Quasi-random start `i` in parameter space.
fn start(family: Family, i: u64) -> Vec<f64> {
    let u: Vec<f64> = [2, 3, 5].iter().map(|&b| halton(i + 1, b)).collect();
    let p = match family {
        Family::HuslerReiss => vec![(0.05f64.ln() + u[0] * (5f64.ln() - 0.05f64.ln())).exp()],
        Family::AsymmetricLogistic => vec![0.1 + 0.8 * u[0], 0.1 + 0.85 * u[1], 0.1 + 0.85 * u[2]],
        Family::ExtremalT => vec![-0.8 + 1.7 * u[0], (0.2f64.ln() + u[1] * (20f64.ln() - 0.2f64.ln())).exp()],
    };
    from_params(family, &p)
}

/// Continuous mass of `model` on `[lo, hi]`.
fn cont_mass(model: &SpectralModel, lo: f64, hi: f64) -> f64 {
    if hi <= lo || !model.has_density() {
        return 0.0;
    }
    quad_vec(
        |w, wc, out: &mut [f64]| out[0] = model.density_pair(w, wc),
        1,
        lo,
        hi,
        &[],
        1e-10,
        MAX_SUBDIVISIONS,
    )
    .value[0]
}

/// Log-likelihood of `sample` under `model`.
///
/// Interior angles contribute `log h(ω)`; angles within the endpoint
/// tolerance are censored, contributing the log-probability of the atom
/// plus the continuous mass within the tolerance.
pub fn log_likelihood(model: &SpectralModel, sample: &AngularSample) -> f64 {
    let (n0, n1) = (sample.count0(), sample.count1());
    let mut ll = 0.0;
    for w in sample.interior() {
        ll += model.log_density_pair(w, 1.0 - w);
        if ll == f64::NEG_INFINITY {
            return ll;
        }
    }
    let eps = sample.endpoint_tol;
    if n0 > 0 {
        let p = model.atom_mass_at(0.0) + if eps > 0.0 { cont_mass(model, 0.0, eps) } else { 0.0 };
        ll += n0 as f64 * p.ln();
    }
    if n1 > 0 {
        let p = model.atom_mass_at(1.0) + if eps > 0.0 { cont_mass(model, 1.0 - eps, 1.0) } else { 0.0 };
        ll += n1 as f64 * p.ln();
    }
    if ll.is_nan() {
        f64::NEG_INFINITY
    } else {
        ll
    }
}

fn check_support(family: Family, sample: &AngularSample) -> Result<()> {
    if sample.is_empty() {
        return Err(Error::InvalidInput("cannot fit an empty sample".into()));
    }
    if !family.has_atoms() {
        let exact = sample.angles.iter().filter(|&&w| w == 0.0 || w == 1.0).count();
        if exact > 0 {
            return Err(Error::SupportMismatch(format!(
                "{family} has no endpoint atoms but {exact} angles sit exactly at 0 or 1"
            )));
        }
    }
    Ok(())
}

fn run(family: Family, sample: &AngularSample, starts: &[Vec<f64>]) -> Result<FitResult> {
    // Atom-free families see every angle as interior.
    let sample = if family.has_atoms() {
        sample.clone()
    } else {
        sample.clone().with_endpoint_tol(0.0)
    };
    let negll = |t: &[f64]| -> f64 {
        match SpectralModel::from_params(family, &to_params(family, t)) {
            Ok(m) => -log_likelihood(&m, &sample),
            Err(_) => f64::INFINITY,
        }
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut evaluations = 0;
    for s in starts {
        let m = nelder_mead(&negll, s, 0.5, 1e-10, 2000);
        evaluations += m.iterations;
        if m.value.is_finite() && best.as_ref().is_none_or(|b| m.value < b.1) {
            best = Some((m.x, m.value));
        }
    }
    let (t, v) = best.ok_or_else(|| {
        Error::Optimizer(format!("{family} likelihood is -inf at every start (support mismatch)"))
    })?;
    // polish from the best point
    let m = nelder_mead(&negll, &t, 0.05, 1e-12, 2000);
    let (t, v) = if m.value <= v { (m.x, m.value) } else { (t, v) };
    Ok(FitResult {
        model: SpectralModel::from_params(family, &to_params(family, &t))?,
        log_likelihood: -v,
        evaluations,
    })
}

/// Maximum likelihood fit of `family`, with Nelder–Mead on
/// log/logit-transformed parameters restarted from quasi-random points.
pub fn fit_mle(family: Family, sample: &AngularSample) -> Result<FitResult> {
    check_support(family, sample)?;
    let starts: Vec<Vec<f64>> = (0..RESTARTS).map(|i| start(family, i)).collect();
    run(family, sample, &starts)
}

/// Local refit starting from `model`'s parameters (used for resamples).
pub fn fit_mle_from(family: Family, sample: &AngularSample, model: &SpectralModel) -> Result<FitResult> {
    check_support(family, sample)?;
    if model.family() != Some(family) {
        return Err(Error::InvalidInput("start model belongs to another family".into()));
    }
    run(family, sample, &[from_params(family, &model.params())])
}
