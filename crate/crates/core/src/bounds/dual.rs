//! Lagrange dual of `sup { E_μ(L' σX) : E_μ φ(L') ≤ K, E_μ L' = 1, E_μ(L'Y) = y }`.
//!
//! With `s = σX + b + cY` the dual function is
//! `G(λ, b, c) = E_μ sup_{ℓ≥0} {ℓ s - λ φ(ℓ)} + λK - b - c y`,
//! convex in `(λ, b, c)`; its gradient is the vector of constraint residuals
//! and its minimiser gives the optimal `L' = ℓ(s, λ)`.

use nalgebra::{DMatrix, DVector};

use crate::spectral::pickands_x;

use super::setting::Setting;
use super::{Ball, Support};

impl Ball {
    /// Maximiser of `ℓ s - λ φ(ℓ)` over `ℓ ≥ 0`.
    pub(crate) fn ell(self, s: f64, lam: f64, l: f64) -> f64 {
        match self {
            Self::ChiSquare => (l + s / (2.0 * lam)).max(0.0),
            Self::Renyi { eta } => {
                if s > 0.0 {
                    (s / (lam * eta)).powf(1.0 / (eta - 1.0))
                } else {
                    0.0
                }
            }
            Self::KullbackLeibler => (s / lam - 1.0).exp(),
        }
    }

    pub(crate) fn phi(self, ell: f64, l: f64) -> f64 {
        match self {
            Self::ChiSquare => (ell - l) * (ell - l),
            Self::Renyi { eta } => ell.powf(eta),
            Self::KullbackLeibler => {
                if ell > 0.0 {
                    ell * ell.ln()
                } else {
                    0.0
                }
            }
        }
    }

    fn dphi(self, ell: f64, l: f64) -> f64 {
        match self {
            Self::ChiSquare => 2.0 * (ell - l),
            Self::Renyi { eta } => eta * ell.powf(eta - 1.0),
            Self::KullbackLeibler => ell.ln() + 1.0,
        }
    }

    /// `∂ℓ/∂s = 1/(λ φ''(ℓ))` where `ℓ > 0`.
    fn ell_s(self, ell: f64, lam: f64) -> f64 {
        if !(ell > 0.0) {
            return 0.0;
        }
        match self {
            Self::ChiSquare => 0.5 / lam,
            Self::Renyi { eta } => 1.0 / (lam * eta * (eta - 1.0) * ell.powf(eta - 2.0)),
            Self::KullbackLeibler => ell / lam,
        }
    }

    /// Value of `s` below which `ℓ` vanishes.
    fn kink(self, lam: f64, l: f64) -> Option<f64> {
        match self {
            Self::ChiSquare => Some(-2.0 * lam * l),
            Self::Renyi { .. } => Some(0.0),
            Self::KullbackLeibler => None,
        }
    }

    /// Bound `K` on `E_μ φ(L')` for a ball of radius `δ`.
    pub(crate) fn radius(self, delta: f64) -> f64 {
        match self {
            Self::Renyi { eta } => ((eta - 1.0) * delta).exp(),
            _ => delta,
        }
    }

    /// Inverse of [`radius`](Self::radius).
    pub(crate) fn from_radius(self, k: f64) -> f64 {
        match self {
            Self::Renyi { eta } => k.ln() / (eta - 1.0),
            _ => k,
        }
    }

    /// Local curvature: divergence ≈ `κ ε² var U` for `L' = 1 + εU`.
    pub(crate) fn curvature(self) -> f64 {
        match self {
            Self::ChiSquare => 1.0,
            Self::Renyi { eta } => 0.5 * eta,
            Self::KullbackLeibler => 0.5,
        }
    }

    /// Dual point whose `ℓ` is approximately `L + εU`, where
    /// `U = σX + β₀ + β₁Y` has unit coefficient on `σX`.
    pub(crate) fn dual_start(self, eps: f64, beta0: f64, beta1: f64) -> [f64; 3] {
        match self {
            Self::ChiSquare => [0.5 / eps, beta0, beta1],
            Self::Renyi { eta } => {
                let lam = 1.0 / (eta * (eta - 1.0) * eps);
                [lam, lam * eta + beta0, beta1]
            }
            Self::KullbackLeibler => {
                let lam = 1.0 / eps;
                [lam, lam + beta0, beta1]
            }
        }
    }

    /// Primal multipliers `(a, b, c)` of a dual point (see [`super::Multipliers`]).
    pub(crate) fn primal(self, xcoef: f64, lam: f64, b: f64, c: f64) -> (f64, f64, f64) {
        match self {
            Self::ChiSquare => {
                let k = 0.5 / lam;
                (xcoef * k, b * k, c * k)
            }
            Self::Renyi { eta } => {
                let k = 1.0 / (lam * eta);
                (xcoef * k, b * k, c * k)
            }
            Self::KullbackLeibler => (xcoef / lam, b / lam - 1.0, c / lam),
        }
    }

    /// `L'` from primal multipliers, at a point with `X = x`, `Y = w`, `L = l`.
    pub(crate) fn ell_primal(self, a: f64, b: f64, c: f64, x: f64, w: f64, l: f64) -> f64 {
        let t = a * x + b + c * w;
        match self {
            Self::ChiSquare => (t + l).max(0.0),
            Self::Renyi { eta } => {
                if t > 0.0 {
                    t.powf(1.0 / (eta - 1.0))
                } else {
                    0.0
                }
            }
            Self::KullbackLeibler => t.exp(),
        }
    }

    /// `φ(0, L)`, the cost of a region where `L'` vanishes.
    pub(crate) fn phi_zero(self, l: f64) -> f64 {
        self.phi(0.0, l)
    }
}

pub(crate) const N_INTEGRALS: usize = 11;

/// Integrals at one dual point:
/// `[ℓs - λφ, ℓ, ℓY, φ, ℓ_s, ℓ_sY, ℓ_sY², φ'ℓ_s, φ'ℓ_sY, φ'²ℓ_s, ℓX]`.
pub(crate) type Integrals = [f64; N_INTEGRALS];

/// One dual problem: ball, objective sign, support restriction.
pub(crate) struct Dual<'a> {
    pub s: &'a Setting,
    pub ball: Ball,
    /// Coefficient of `X` in `s`: `±1`, or 0 for the minimum-divergence
    /// problem behind `δ**`.
    pub xcoef: f64,
    pub support: Support,
    /// `K`; unused when `λ` is fixed.
    pub radius: f64,
    /// Target `E' Y`.
    pub y: f64,
}

impl Dual<'_> {
    pub fn integrals(&self, lam: f64, b: f64, c: f64) -> Option<Integrals> {
        let (z, ball, xcoef, support) = (self.s.z, self.ball, self.xcoef, self.support);
        let kinks = match ball.kink(lam, 1.0) {
            Some(_) => self.s.kinks(|w, _, l| xcoef * pickands_x(z, w) + b + c * w - ball.kink(lam, l).unwrap()),
            None => Vec::new(),
        };
        let (v, _) = self.s.expect(
            |w, _, l, out: &mut [f64]| {
                if !support.contains(w) {
                    out.iter_mut().for_each(|o| *o = 0.0);
                    let f0 = ball.phi_zero(l);
                    out[0] = -lam * f0;
                    out[3] = f0;
                    return;
                }
                let x = pickands_x(z, w);
                let sv = xcoef * x + b + c * w;
                let ell = ball.ell(sv, lam, l);
                let phi = ball.phi(ell, l);
                let ls = ball.ell_s(ell, lam);
                let dp = if ls > 0.0 { ball.dphi(ell, l) } else { 0.0 };
                out[0] = if ell > 0.0 { ell * sv } else { 0.0 } - lam * phi;
                out[1] = ell;
                out[2] = ell * w;
                out[3] = phi;
                out[4] = ls;
                out[5] = ls * w;
                out[6] = ls * w * w;
                out[7] = dp * ls;
                out[8] = dp * ls * w;
                out[9] = dp * dp * ls;
                out[10] = ell * x;
            },
            N_INTEGRALS,
            &kinks,
        );
        if v.iter().all(|x| x.is_finite()) {
            Some(v.try_into().expect("fixed length"))
        } else {
            None
        }
    }

    /// `G`, its gradient and Hessian in `(λ, b, c)`.
    pub fn eval_full(&self, x: &[f64]) -> Option<Eval> {
        let (lam, b, c) = (x[0], x[1], x[2]);
        if !(lam > 0.0) {
            return None;
        }
        let m = self.integrals(lam, b, c)?;
        let value = m[0] + lam * self.radius - b - c * self.y;
        let grad = DVector::from_vec(vec![self.radius - m[3], m[1] - 1.0, m[2] - self.y]);
        let hess = DMatrix::from_row_slice(
            3,
            3,
            &[m[9], -m[7], -m[8], -m[7], m[4], m[5], -m[8], m[5], m[6]],
        );
        Some(Eval { value, grad, hess, m: m.to_vec() })
    }

    /// Dual of the minimum-divergence problem with `λ = 1`, in `(b, c)`.
    pub fn eval_fixed(&self, x: &[f64]) -> Option<Eval> {
        let (b, c) = (x[0], x[1]);
        let m = self.integrals(1.0, b, c)?;
        let value = m[0] - b - c * self.y;
        let grad = DVector::from_vec(vec![m[1] - 1.0, m[2] - self.y]);
        let hess = DMatrix::from_row_slice(2, 2, &[m[4], m[5], m[5], m[6]]);
        Some(Eval { value, grad, hess, m: m.to_vec() })
    }
}

pub(crate) struct Eval {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
    /// Problem-specific integrals at the point.
    pub m: Vec<f64>,
}

fn sup_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton minimisation of a convex function with Levenberg
/// regularisation and Armijo backtracking. Returns the minimiser once the
/// gradient is below `gtol` in sup norm.
pub(crate) fn newton_min(
    eval: impl Fn(&[f64]) -> Option<Eval>,
    x0: &[f64],
    gtol: f64,
    max_iter: usize,
) -> Option<(Vec<f64>, Eval)> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut cur = eval(&x)?;
    for _ in 0..max_iter {
        let gn = sup_norm(&cur.grad);
        if gn <= gtol {
            return Some((x, cur));
        }
        let scale = (0..n).map(|i| cur.hess[(i, i)].abs()).fold(1e-300, f64::max);
        let mut reg = 0.0;
        let dir = loop {
            let mut h = cur.hess.clone();
            for i in 0..n {
                h[(i, i)] += reg * scale;
            }
            if let Some(ch) = h.cholesky() {
                let d = ch.solve(&(-&cur.grad));
                if d.iter().all(|v| v.is_finite()) && d.dot(&cur.grad) < 0.0 {
                    break d;
                }
            }
            reg = if reg == 0.0 { 1e-10 } else { reg * 10.0 };
            if reg > 1e10 {
                break -cur.grad.clone() / scale;
            }
        };
        let slope = dir.dot(&cur.grad);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(dir.iter()).map(|(a, d)| a + t * d).collect();
            if let Some(e) = eval(&trial) {
                let armijo = e.value <= cur.value + 1e-4 * t * slope;
                // near the optimum, quadrature noise swamps the decrease
                let noisy = e.value <= cur.value + 1e-12 * (1.0 + cur.value.abs()) && sup_norm(&e.grad) < gn;
                if armijo || noisy {
                    accepted = Some((trial, e));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((xn, e)) => {
                x = xn;
                cur = e;
            }
            None => break,
        }
    }
    if sup_norm(&cur.grad) <= 1e3 * gtol {
        Some((x, cur))
    } else {
        None
    }
}
