use crate::bounds::Direction;
use crate::divergence::{divergence, DominatingMeasure};
use crate::numerics::{bisect, golden_section};
use crate::spectral::SpectralModel;
use crate::{Error, Result};

/// Extreme Pickands value within a one-parameter slice of a family.
#[derive(Debug, Clone)]
pub struct ClassBound {
    pub value: f64,
    /// Optimal value of the free parameter.
    pub param: f64,
    pub model: SpectralModel,
    /// Feasible parameter interval `{θ : D_μ(model(θ), model) ≤ δ}`.
    pub interval: (f64, f64),
}

/// Free parameter, its index in the parameter vector, and its range.
fn free_parameter(model: &SpectralModel) -> Result<(usize, f64, f64)> {
    match model {
        SpectralModel::HuslerReiss { .. } => Ok((0, 1e-3, 50.0)),
        SpectralModel::AsymmetricLogistic { .. } => Ok((0, 1e-3, 1.0 - 1e-3)),
        SpectralModel::ExtremalT { .. } => Ok((0, -0.999, 0.999)),
        SpectralModel::Empirical(_) => Err(Error::InvalidInput(
            "bounds in the model class need a parametric model".into(),
        )),
    }
}

fn with_param(model: &SpectralModel, idx: usize, theta: f64) -> Result<SpectralModel> {
    let mut p = model.params();
    p[idx] = theta;
    SpectralModel::from_params(model.family().expect("parametric"), &p)
}

/// Largest (or smallest) `A(z)` over models of the same family differing
/// from `model` only in the free parameter (HR: λ; AL: a; ET: ρ) and
/// within divergence `δ` of it.
pub fn model_class_bounds(
    model: &SpectralModel,
    z: f64,
    mu: &DominatingMeasure,
    delta: f64,
    direction: Direction,
) -> Result<ClassBound> {
    let (idx, lo_box, hi_box) = free_parameter(model)?;
    let theta0 = model.params()[idx];
    let a0 = model.pickands(z)?;
    let own = ClassBound {
        value: a0,
        param: theta0,
        model: model.clone(),
        interval: (theta0, theta0),
    };
    if !(delta > 0.0) {
        return Ok(own);
    }
    let excess = |t: f64| -> f64 {
        match with_param(model, idx, t).and_then(|m| divergence(&m, model, mu)) {
            Ok(d) if d.is_finite() => d - delta,
            _ => f64::INFINITY,
        }
    };
    let edge = |bound: f64| -> f64 {
        if excess(bound) <= 0.0 {
            bound
        } else {
            bisect(
                |t| if excess(t) > 0.0 { 1.0 } else { -1.0 },
                theta0,
                bound,
                1e-9,
                200,
            )
            .unwrap_or(theta0)
        }
    };
    let (lo, hi) = (edge(lo_box), edge(hi_box));
    let sign = direction.sign();
    let objective = |t: f64| -> f64 {
        with_param(model, idx, t)
            .and_then(|m| m.pickands(z))
            .map_or(f64::INFINITY, |v| -sign * v)
    };
    // coarse scan, then golden-section refinement around the best node
    let n = 32;
    let nodes: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let vals: Vec<f64> = nodes.iter().map(|&t| objective(t)).collect();
    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    let (a, b) = (nodes[best.saturating_sub(1)], nodes[(best + 1).min(n)]);
    let (mut t, mut v) = golden_section(&objective, a, b, 1e-9);
    if vals[best] < v {
        t = nodes[best];
        v = vals[best];
    }
    if !v.is_finite() {
        return Ok(own);
    }
    Ok(ClassBound {
        value: -sign * v,
        param: t,
        model: with_param(model, idx, t)?,
        interval: (lo, hi),
    })
}
