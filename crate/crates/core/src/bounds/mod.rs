//! Robust bounds on Pickands' dependence function.
//!
//! For `X = X(z) = 2{(1-z)Y ∨ z(1-Y)}` and the constraint `E' Y = E Y`, the
//! module computes
//!
//! - the square-root bounds `E X ± √(δ det Σ_μ(X,Y) / det Σ_μ(Y))`,
//! - the thresholds `δ*` (square-root bound exact below it) and `δ**`
//!   (the trivial bound attained above it),
//! - exact bounds from the optimality conditions `L* = (aX + b + cY + L)₊`,
//! - the analogous exact bounds for Rényi-η and Kullback–Leibler balls.
//!
//! Exact values are found by minimising the convex Lagrange dual in the
//! multipliers with a damped Newton iteration, starting from the
//! square-root solution.

pub(crate) mod dual;
mod exact;
mod moments;
mod setting;

pub use exact::{
    delta_star_star, exact_bound, kl_bound, optimizer_density, pseudo_density, renyi_eta_bound,
};
pub use moments::{delta_star, moments_for_pickands, sqrt_bound, MomentSummary};

use serde::Serialize;

use crate::{Error, Result};

/// Which side of the robust interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Upper,
    Lower,
}

impl Direction {
    /// `+1` for upper, `-1` for lower.
    pub fn sign(self) -> f64 {
        match self {
            Self::Upper => 1.0,
            Self::Lower => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Upper => "upper",
            Self::Lower => "lower",
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "upper" | "max" => Ok(Self::Upper),
            "lower" | "min" => Ok(Self::Lower),
            other => Err(Error::InvalidInput(format!("unknown direction '{other}'"))),
        }
    }
}

/// The neighbourhood around the reference model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Ball {
    /// `E_μ(L' - L)² ≤ δ`.
    ChiSquare,
    /// `log E L'^η / (η - 1) ≤ δ`, with `μ = P`.
    Renyi { eta: f64 },
    /// `E L' log L' ≤ δ`, with `μ = P`.
    KullbackLeibler,
}

/// How the reported value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `δ ≤ δ*`: the square-root bound is attained.
    SqrtExact,
    /// Optimality system solved.
    ExactSolved,
    /// `δ ≥ δ**`: the trivial bound is attained.
    Degenerate,
    /// The solver failed; only the conservative square-root value is valid.
    Conservative,
}

/// Restriction of the optimising density's support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "z", rename_all = "snake_case")]
pub enum Support {
    All,
    /// `{Y ≥ z}`.
    AtLeast(f64),
    /// `{Y ≤ z}`.
    AtMost(f64),
}

impl Support {
    pub fn contains(self, w: f64) -> bool {
        match self {
            Self::All => true,
            Self::AtLeast(z) => w >= z,
            Self::AtMost(z) => w <= z,
        }
    }
}

/// Multipliers of the optimising Radon–Nikodym derivative:
///
/// - χ²: `L* = (aX + b + cY + L)₊`
/// - Rényi-η: `L* = (aX + b + cY)₊^{1/(η-1)}`
/// - Kullback–Leibler: `L* = exp(aX + b + cY)`
///
/// set to zero outside `support`. `a < 0` for lower bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Multipliers {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub support: Support,
}

/// One robust bound at `(z, δ)`.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub z: f64,
    pub delta: f64,
    pub direction: Direction,
    pub ball: Ball,
    /// `A(z)` under the reference model.
    pub model_value: f64,
    /// Square-root bound (χ² balls only).
    pub sqrt_value: Option<f64>,
    pub exact_value: Option<f64>,
    pub regime: Regime,
    pub multipliers: Option<Multipliers>,
    /// Exactness threshold of the square-root bound (χ² balls only).
    pub delta_star: Option<f64>,
    /// Degeneracy threshold; `∞` when unknown or nonexistent.
    pub delta_star_star: f64,
    /// Whether the support of `μ` contains `0`, `z` and `1`. When it does
    /// not, `δ**` is not identified and is reported as `∞`.
    pub support_assumption: bool,
}

impl BoundReport {
    /// Best available valid bound: the exact value, else the square-root
    /// bound, else the trivial one.
    pub fn value(&self) -> f64 {
        self.exact_value
            .or(self.sqrt_value)
            .unwrap_or_else(|| trivial_bound(self.z, self.direction))
    }

    /// [`value`](Self::value) restricted to the Pickands triangle.
    pub fn clipped(&self) -> f64 {
        clip_to_triangle(self.z, self.value())
    }
}

/// The trivial bounds `z ∨ (1-z) ≤ A(z) ≤ 1`.
pub fn trivial_bound(z: f64, direction: Direction) -> f64 {
    match direction {
        Direction::Upper => 1.0,
        Direction::Lower => z.max(1.0 - z),
    }
}

/// Restricts a bound on `A(z)` to `[z ∨ (1-z), 1]`.
pub fn clip_to_triangle(z: f64, v: f64) -> f64 {
    v.clamp(z.max(1.0 - z), 1.0)
}
