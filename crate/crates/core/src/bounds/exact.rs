use std::sync::Arc;

use crate::divergence::DominatingMeasure;
use crate::numerics::{Atom, AtomicMeasure, DensityFn};
use crate::spectral::{pickands_x, SpectralModel};
use crate::{Error, Result};

use super::dual::{newton_min, Dual};
use super::moments::{delta_star_in, moments_in, sqrt_bound, MomentSummary, DET_EPS};
use super::setting::Setting;
use super::{trivial_bound, Ball, BoundReport, Direction, Multipliers, Regime, Support};

const GTOL: f64 = 1e-10;
const MAX_NEWTON: usize = 200;

/// Degeneracy threshold and, for lower bounds away from `z = ½`, the
/// minimum-divergence optimiser attaining the trivial bound.
fn delta_star_star_in(s: &Setting, ms: &MomentSummary, ball: Ball, direction: Direction) -> (f64, Option<Multipliers>) {
    let z = s.z;
    let y = ms.e_y;
    // μ-integral of φ(0, L), the cost of moving all mass away
    let base = if let Ball::ChiSquare = ball {
        s.expect(|_, _, l, out: &mut [f64]| out[0] = l * l, 1, &[]).0[0]
    } else {
        0.0
    };
    let atom = |loc: f64| s.atoms.iter().find(|a| a.0 == loc).copied();
    // all mass on atoms with prescribed P'-masses
    let on_atoms = |target: &[(f64, f64)]| -> f64 {
        let mut total = base;
        for &(loc, q) in target {
            let Some((_, m, l)) = atom(loc) else {
                return f64::INFINITY;
            };
            total += m * (ball.phi(q / m, l) - ball.phi_zero(l));
        }
        ball.from_radius(total).max(0.0)
    };
    match direction {
        Direction::Upper => (on_atoms(&[(0.0, 1.0 - y), (1.0, y)]), None),
        Direction::Lower if (z - 0.5).abs() < 1e-12 => (on_atoms(&[(0.5, 1.0)]), None),
        Direction::Lower => {
            let support = if z < 0.5 { Support::AtLeast(z) } else { Support::AtMost(z) };
            let dual = Dual {
                s,
                ball,
                xcoef: 0.0,
                support,
                radius: 0.0,
                y,
            };
            let start = match ball {
                Ball::ChiSquare => [0.0, 0.0],
                Ball::Renyi { eta } => [eta, 0.0],
                Ball::KullbackLeibler => [1.0, 0.0],
            };
            match newton_min(|x| dual.eval_fixed(x), &start, GTOL, MAX_NEWTON) {
                Some((x, e)) => {
                    let (_, b, c) = ball.primal(0.0, 1.0, x[0], x[1]);
                    let m = Multipliers { a: 0.0, b, c, support };
                    (ball.from_radius(e.m[3]).max(0.0), Some(m))
                }
                None => (f64::INFINITY, None),
            }
        }
    }
}

/// Smallest `δ` from which the trivial bound (`1` upper, `z ∨ (1-z)`
/// lower) is attained in the `D_μ` ball; `∞` if never or if the support of
/// `μ` does not contain `0`, `z` and `1`.
pub fn delta_star_star(model: &SpectralModel, z: f64, mu: &DominatingMeasure, direction: Direction) -> Result<f64> {
    let s = Setting::new(model, z, mu)?;
    let ms = moments_in(&s)?;
    if !support_assumption(&s) {
        return Ok(f64::INFINITY);
    }
    Ok(delta_star_star_in(&s, &ms, Ball::ChiSquare, direction).0)
}

fn support_assumption(s: &Setting) -> bool {
    [0.0, s.z, 1.0].iter().all(|&x| s.in_support(x))
}

fn solve(s: &Setting, ball: Ball, delta: f64, direction: Direction) -> Result<BoundReport> {
    if !(delta >= 0.0) || delta.is_infinite() {
        return Err(Error::InvalidParameter(format!("radius δ = {delta} must be finite and nonnegative")));
    }
    let ms = moments_in(s)?;
    let z = s.z;
    let sign = direction.sign();
    let chi = matches!(ball, Ball::ChiSquare);
    let sqrt_value = chi.then(|| sqrt_bound(&ms, delta, direction));
    let delta_star = chi.then(|| delta_star_in(s, &ms, direction));
    let support_ok = support_assumption(s);
    let (dss, degenerate_mult) = if support_ok {
        delta_star_star_in(s, &ms, ball, direction)
    } else {
        (f64::INFINITY, None)
    };
    let mut report = BoundReport {
        z,
        delta,
        direction,
        ball,
        model_value: ms.e_x,
        sqrt_value,
        exact_value: None,
        regime: Regime::Conservative,
        multipliers: None,
        delta_star,
        delta_star_star: dss,
        support_assumption: support_ok,
    };
    if ms.det_ratio <= DET_EPS || delta == 0.0 {
        // E' X is pinned by the constraint (or the ball is a point)
        report.exact_value = Some(ms.e_x);
        report.regime = if chi { Regime::SqrtExact } else { Regime::ExactSolved };
        return Ok(report);
    }
    if delta >= dss {
        report.exact_value = Some(trivial_bound(z, direction));
        report.regime = Regime::Degenerate;
        report.multipliers = degenerate_mult;
        return Ok(report);
    }
    // ℓ ≈ L + εU with U = σ(X - m_X - β(Y - m_Y)), the square-root optimiser
    let beta = ms.cov_xy / ms.var_y;
    let eps = (delta / (ball.curvature() * ms.det_ratio)).sqrt();
    let start = ball.dual_start(eps, -sign * (ms.mean_x - beta * ms.mean_y), -sign * beta);
    if chi && delta <= delta_star.unwrap_or(0.0) {
        let (a, b, c) = ball.primal(sign, start[0], start[1], start[2]);
        report.exact_value = sqrt_value;
        report.regime = Regime::SqrtExact;
        report.multipliers = Some(Multipliers { a, b, c, support: Support::All });
        return Ok(report);
    }
    let dual_at = |d: f64| Dual {
        s,
        ball,
        xcoef: sign,
        support: Support::All,
        radius: ball.radius(d),
        y: ms.e_y,
    };
    let dual = dual_at(delta);
    let solved = newton_min(|x| dual.eval_full(x), &start, GTOL, MAX_NEWTON).or_else(|| {
        // far above δ* the square-root start can lead Newton towards λ = 0;
        // follow the solution up from a small radius instead
        let d0 = delta_star.unwrap_or(0.0).max(delta / 64.0).min(delta);
        continuation(&dual_at, &ms, ball, sign, d0, delta)
    });
    if let Some((x, e)) = solved {
        let (a, b, c) = ball.primal(sign, x[0], x[1], x[2]);
        report.exact_value = Some(e.m[10]);
        report.regime = Regime::ExactSolved;
        report.multipliers = Some(Multipliers { a, b, c, support: Support::All });
    }
    Ok(report)
}

/// Dual solution at `delta`, warm-started along radii from `d0`.
fn continuation<'a>(
    dual_at: &impl Fn(f64) -> Dual<'a>,
    ms: &MomentSummary,
    ball: Ball,
    sign: f64,
    d0: f64,
    delta: f64,
) -> Option<(Vec<f64>, super::dual::Eval)> {
    let beta = ms.cov_xy / ms.var_y;
    let eps = (d0 / (ball.curvature() * ms.det_ratio)).sqrt();
    let start = ball.dual_start(eps, -sign * (ms.mean_x - beta * ms.mean_y), -sign * beta);
    let dual = dual_at(d0);
    let (mut x, mut e) = newton_min(|x| dual.eval_full(x), &start, GTOL, MAX_NEWTON)?;
    let mut d = d0;
    let mut ratio: f64 = 1.5;
    while d < delta {
        let next = (d * ratio).min(delta);
        let dual = dual_at(next);
        // λ scales roughly like 1/√δ
        let mut trial = x.clone();
        trial[0] *= (d / next).sqrt();
        match newton_min(|x| dual.eval_full(x), &trial, GTOL, MAX_NEWTON) {
            Some((xn, en)) => {
                x = xn;
                e = en;
                d = next;
                ratio = (ratio * ratio).min(2.0);
            }
            None => {
                ratio = ratio.sqrt();
                if ratio < 1.001 {
                    return None;
                }
            }
        }
    }
    Some((x, e))
}

/// Exact robust bound on `A(z)` over `{P' : D_μ(P', P) ≤ δ, E' Y = E Y}`,
/// with the square-root bound and both thresholds.
pub fn exact_bound(
    model: &SpectralModel,
    z: f64,
    mu: &DominatingMeasure,
    delta: f64,
    direction: Direction,
) -> Result<BoundReport> {
    solve(&Setting::new(model, z, mu)?, Ball::ChiSquare, delta, direction)
}

/// Exact bound over the Rényi ball `log E L'^η / (η-1) ≤ δ` (`η > 1`).
pub fn renyi_eta_bound(model: &SpectralModel, z: f64, delta: f64, eta: f64, direction: Direction) -> Result<BoundReport> {
    if !(eta > 1.0) || !eta.is_finite() {
        return Err(Error::InvalidParameter(format!("Rényi order η = {eta} must exceed 1")));
    }
    let s = Setting::new(model, z, &DominatingMeasure::ReferenceP)?;
    solve(&s, Ball::Renyi { eta }, delta, direction)
}

/// Exact bound over the Kullback–Leibler ball `E L' log L' ≤ δ`, attained
/// by an exponential change of measure.
pub fn kl_bound(model: &SpectralModel, z: f64, delta: f64, direction: Direction) -> Result<BoundReport> {
    let s = Setting::new(model, z, &DominatingMeasure::ReferenceP)?;
    solve(&s, Ball::KullbackLeibler, delta, direction)
}

fn mu_for(report: &BoundReport, mu: &DominatingMeasure) -> DominatingMeasure {
    match report.ball {
        Ball::ChiSquare => mu.clone(),
        _ => DominatingMeasure::ReferenceP,
    }
}

/// The worst-case (or best-case) spectral measure behind `report`: density
/// `L*·(dμ/dω)` plus the reweighted atoms of `μ`.
pub fn optimizer_density(
    report: &BoundReport,
    model: &SpectralModel,
    z: f64,
    mu: &DominatingMeasure,
) -> Result<AtomicMeasure> {
    let s = Setting::new(model, z, &mu_for(report, mu))?;
    let y = moments_in(&s)?.e_y;
    let mult = match (report.regime, report.multipliers) {
        (_, Some(m)) => m,
        (Regime::Degenerate, None) => {
            let atoms = match report.direction {
                Direction::Upper => vec![Atom::new(0.0, 1.0 - y), Atom::new(1.0, y)],
                Direction::Lower => vec![Atom::new(0.5, 1.0)],
            };
            return AtomicMeasure::atoms_only(atoms);
        }
        (Regime::SqrtExact | Regime::ExactSolved, None) => return Ok(model.measure()),
        (Regime::Conservative, None) => {
            return Err(Error::InvalidInput(
                "no optimiser: the optimality system was not solved".into(),
            ))
        }
    };
    let ball = report.ball;
    let Multipliers { a, b, c, support } = mult;
    let ell = move |s: &Setting, w: f64, l: f64| -> f64 {
        if support.contains(w) {
            ball.ell_primal(a, b, c, pickands_x(s.z, w), w, l)
        } else {
            0.0
        }
    };
    let atoms: Vec<Atom> = s
        .atoms
        .iter()
        .map(|&(loc, m, l)| Atom::new(loc, m * ell(&s, loc, l)))
        .filter(|a| a.mass > 0.0)
        .collect();
    let mut breaks = s.kinks(|w, _, l| a * pickands_x(z, w) + b + c * w + if let Ball::ChiSquare = ball { l } else { 0.0 });
    breaks.push(z);
    if let Support::AtLeast(t) | Support::AtMost(t) = support {
        breaks.push(t);
    }
    let shared = Arc::new(s);
    let dens: DensityFn = {
        let s = shared.clone();
        Arc::new(move |w, wc| {
            let d = s.mu_density(w, wc);
            if d == 0.0 {
                0.0
            } else {
                d * ell(&s, w, s.l(w, wc))
            }
        })
    };
    let m = AtomicMeasure::new(shared.has_continuous().then_some(dens), atoms)?;
    Ok(m.with_breaks(breaks))
}

/// Lebesgue density of the signed square-root optimiser `L + εU` (no
/// positivity constraint), at the points `w`.
pub fn pseudo_density(
    model: &SpectralModel,
    z: f64,
    mu: &DominatingMeasure,
    delta: f64,
    direction: Direction,
    w: &[f64],
) -> Result<Vec<f64>> {
    let s = Setting::new(model, z, mu)?;
    let ms = moments_in(&s)?;
    let eps = if ms.det_ratio > DET_EPS { (delta / ms.det_ratio).sqrt() } else { 0.0 };
    let beta = ms.cov_xy / ms.var_y;
    let sign = direction.sign();
    Ok(w
        .iter()
        .map(|&x| {
            let wc = 1.0 - x;
            let u = sign * (pickands_x(z, x) - ms.mean_x - beta * (x - ms.mean_y));
            s.mu_density(x, wc) * (s.l(x, wc) + eps * u)
        })
        .collect())
}
