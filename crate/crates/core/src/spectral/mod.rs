//! Bivariate spectral distributions on `[0, 1]`.
//!
//! A spectral distribution is the law of the angle `Y = Z₁/(Z₁+Z₂)` of a
//! large observation. Parametric families have a density on `(0, 1)` and
//! possibly atoms at the endpoints; every valid model has `E Y = 1/2`.

mod sample;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use statrs::function::gamma::ln_gamma;

use crate::numerics::special::{norm_pdf, student_t_cdf};
use crate::numerics::{integrate_with_breaks, Atom, AtomicMeasure, DEFAULT_TOL};
use crate::{Error, Result};

pub use sample::{
    simulate_asym_logistic, to_pareto_margins, AngleSampler, BivariateSample, MarginKind,
};

/// Number of nodes of the uniform grid carrying empirical densities.
pub const GRID_NODES: usize = 401;

/// Parametric family tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Family {
    HuslerReiss,
    AsymmetricLogistic,
    ExtremalT,
}

impl Family {
    pub fn n_params(self) -> usize {
        match self {
            Family::HuslerReiss => 1,
            Family::AsymmetricLogistic => 3,
            Family::ExtremalT => 2,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Family::HuslerReiss => "HR",
            Family::AsymmetricLogistic => "AL",
            Family::ExtremalT => "ET",
        }
    }

    pub fn has_atoms(self) -> bool {
        !matches!(self, Family::HuslerReiss)
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hr" | "huslerreiss" | "husler-reiss" => Ok(Family::HuslerReiss),
            "al" | "asymmetriclogistic" | "asymmetric-logistic" => Ok(Family::AsymmetricLogistic),
            "et" | "extremalt" | "extremal-t" => Ok(Family::ExtremalT),
            other => Err(Error::InvalidInput(format!("unknown family '{other}'"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A spectral distribution on `[0, 1]`.
#[derive(Debug, Clone)]
pub enum SpectralModel {
    HuslerReiss { lambda: f64 },
    AsymmetricLogistic { a: f64, b1: f64, b2: f64 },
    ExtremalT { rho: f64, a: f64 },
    Empirical(AtomicMeasure),
}

fn logsumexp2(x: f64, y: f64) -> f64 {
    let m = x.max(y);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((x - m).exp() + (y - m).exp()).ln()
}

impl SpectralModel {
    pub fn husler_reiss(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("HR lambda {lambda} must be positive")));
        }
        Ok(Self::HuslerReiss { lambda })
    }

    pub fn asymmetric_logistic(a: f64, b1: f64, b2: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidParameter(format!("AL a {a} must lie in (0, 1)")));
        }
        for b in [b1, b2] {
            if !(0.0..=1.0).contains(&b) {
                return Err(Error::InvalidParameter(format!("AL asymmetry {b} must lie in [0, 1]")));
            }
        }
        Ok(Self::AsymmetricLogistic { a, b1, b2 })
    }

    pub fn extremal_t(rho: f64, a: f64) -> Result<Self> {
        if !(rho > -1.0 && rho < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "ET rho {rho} must lie in (-1, 1); |rho| = 1 is degenerate"
            )));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!("ET a {a} must be positive")));
        }
        Ok(Self::ExtremalT { rho, a })
    }

    pub fn empirical(measure: AtomicMeasure) -> Self {
        Self::Empirical(measure)
    }

    /// Atoms only, no continuous part.
    pub fn from_atoms(atoms: Vec<Atom>) -> Result<Self> {
        Ok(Self::Empirical(AtomicMeasure::atoms_only(atoms)?))
    }

    /// Piecewise-linear density through `values` at the nodes `i/(len-1)`,
    /// plus atoms.
    pub fn from_grid(values: Vec<f64>, atoms: Vec<Atom>) -> Result<Self> {
        if values.len() < 2 || values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter(
                "grid density needs at least two finite nonnegative values".into(),
            ));
        }
        let nodes = values.len();
        let h = 1.0 / (nodes - 1) as f64;
        let values: Arc<[f64]> = values.into();
        let v = values.clone();
        let dens = move |w: f64, _wc: f64| {
            let t = (w / h).clamp(0.0, (nodes - 1) as f64);
            let i = (t.floor() as usize).min(nodes - 2);
            let f = t - i as f64;
            v[i] * (1.0 - f) + v[i + 1] * f
        };
        let breaks: Vec<f64> = (1..nodes - 1).map(|i| i as f64 * h).collect();
        let m = AtomicMeasure::new(Some(Arc::new(dens)), atoms)?.with_breaks(breaks);
        Ok(Self::Empirical(m))
    }

    /// Builds a parametric model from a family tag and parameter vector
    /// (HR: λ; AL: a, b₁, b₂; ET: ρ, a).
    pub fn from_params(family: Family, p: &[f64]) -> Result<Self> {
        if p.len() != family.n_params() {
            return Err(Error::InvalidParameter(format!(
                "{family} takes {} parameters, got {}",
                family.n_params(),
                p.len()
            )));
        }
        match family {
            Family::HuslerReiss => Self::husler_reiss(p[0]),
            Family::AsymmetricLogistic => Self::asymmetric_logistic(p[0], p[1], p[2]),
            Family::ExtremalT => Self::extremal_t(p[0], p[1]),
        }
    }

    pub fn family(&self) -> Option<Family> {
        match self {
            Self::HuslerReiss { .. } => Some(Family::HuslerReiss),
            Self::AsymmetricLogistic { .. } => Some(Family::AsymmetricLogistic),
            Self::ExtremalT { .. } => Some(Family::ExtremalT),
            Self::Empirical(_) => None,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            Self::HuslerReiss { lambda } => vec![lambda],
            Self::AsymmetricLogistic { a, b1, b2 } => vec![a, b1, b2],
            Self::ExtremalT { rho, a } => vec![rho, a],
            Self::Empirical(_) => Vec::new(),
        }
    }

    /// Log of the continuous-part density at `(ω, 1-ω)`; `-∞` where the
    /// density vanishes.
    pub fn log_density_pair(&self, w: f64, wc: f64) -> f64 {
        if !(w > 0.0 && wc > 0.0) {
            return f64::NEG_INFINITY;
        }
        match *self {
            Self::HuslerReiss { lambda } => {
                let (lw, lwc) = (w.ln(), wc.ln());
                let arg = lambda + (lwc - lw) / (2.0 * lambda);
                -0.5 * arg * arg - 0.5 * (2.0 * std::f64::consts::PI).ln()
                    - 2.0 * lw
                    - lwc
                    - (4.0 * lambda).ln()
            }
            Self::AsymmetricLogistic { a, b1, b2 } => {
                if b1 == 0.0 || b2 == 0.0 {
                    return f64::NEG_INFINITY;
                }
                let (lw, lwc) = (w.ln(), wc.ln());
                let ls = logsumexp2((b1.ln() - lw) / a, (b2.ln() - lwc) / a);
                ((1.0 - a) / (2.0 * a)).ln() + (b1.ln() + b2.ln()) / a
                    - (1.0 + 1.0 / a) * (lw + lwc)
                    + (a - 2.0) * ls
            }
            Self::ExtremalT { rho, a } => {
                let (lw, lwc) = (w.ln(), wc.ln());
                let u = lw / a;
                let v = lwc / a;
                let m = u.max(v);
                let e = (-(u - v).abs()).exp();
                // w^{2/a} - 2ρ(w(1-w))^{1/a} + (1-w)^{2/a}, factored to stay positive
                let lq = 2.0 * m + ((e - 1.0).powi(2) + 2.0 * (1.0 - rho) * e).ln();
                let lc = 0.5 * (a + 1.0) * (1.0 - rho * rho).ln() + ln_gamma(0.5 * (a + 2.0))
                    - (2.0 * a * std::f64::consts::PI.sqrt()).ln()
                    - ln_gamma(0.5 * (a + 1.0));
                lc + (1.0 / a - 1.0) * (lw + lwc) - 0.5 * (a + 2.0) * lq
            }
            Self::Empirical(ref m) => match m.density() {
                Some(d) => d(w, wc).ln(),
                None => f64::NEG_INFINITY,
            },
        }
    }

    pub fn density_pair(&self, w: f64, wc: f64) -> f64 {
        match self {
            Self::Empirical(m) => m.density().map_or(0.0, |d| d(w, wc)),
            _ => self.log_density_pair(w, wc).exp(),
        }
    }

    /// Continuous-part density at `ω ∈ (0, 1)`.
    pub fn density(&self, w: f64) -> Result<f64> {
        if !(w > 0.0 && w < 1.0) {
            return Err(Error::InvalidInput(format!("density evaluated at {w} outside (0, 1)")));
        }
        Ok(self.density_pair(w, 1.0 - w))
    }

    pub fn has_density(&self) -> bool {
        match self {
            Self::AsymmetricLogistic { b1, b2, .. } => *b1 > 0.0 && *b2 > 0.0,
            Self::Empirical(m) => m.density().is_some(),
            _ => true,
        }
    }

    /// Point masses, including zero-mass endpoint atoms of the families
    /// that allow them.
    pub fn atoms(&self) -> Vec<Atom> {
        match *self {
            Self::HuslerReiss { .. } => Vec::new(),
            Self::AsymmetricLogistic { a: _, b1, b2 } => {
                if b1 == 0.0 || b2 == 0.0 {
                    // no dependent component: the independence law
                    vec![Atom::new(0.0, 0.5), Atom::new(1.0, 0.5)]
                } else {
                    vec![Atom::new(0.0, 0.5 * (1.0 - b2)), Atom::new(1.0, 0.5 * (1.0 - b1))]
                }
            }
            Self::ExtremalT { rho, a } => {
                let p = et_atom(rho, a);
                vec![Atom::new(0.0, p), Atom::new(1.0, p)]
            }
            Self::Empirical(ref m) => m.atoms().to_vec(),
        }
    }

    pub fn atom_mass_at(&self, loc: f64) -> f64 {
        self.atoms().iter().filter(|a| a.loc == loc).map(|a| a.mass).sum()
    }

    /// The model as a measure (density plus positive atoms).
    pub fn measure(&self) -> AtomicMeasure {
        if let Self::Empirical(m) = self {
            return m.clone();
        }
        let atoms: Vec<Atom> = self.atoms().into_iter().filter(|a| a.mass > 0.0).collect();
        let density = if self.has_density() {
            let me = self.clone();
            let f: crate::numerics::DensityFn = Arc::new(move |w, wc| me.density_pair(w, wc));
            Some(f)
        } else {
            None
        };
        AtomicMeasure::new(density, atoms).expect("parametric atoms are valid")
    }

    /// Pickands' dependence function `A(z) = 2 E{(1-z)Y ∨ z(1-Y)}`.
    pub fn pickands(&self, z: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&z) {
            return Err(Error::InvalidInput(format!("z = {z} outside [0, 1]")));
        }
        let m = self.measure();
        integrate_with_breaks(|w| pickands_x(z, w), &m, &[z], DEFAULT_TOL)
    }

    /// Extremal coefficient `θ = 2 A(1/2)`.
    pub fn extremal_coefficient(&self) -> Result<f64> {
        Ok(2.0 * self.pickands(0.5)?)
    }

    /// Total mass and mean, for validating custom models.
    pub fn mass_and_mean(&self) -> Result<(f64, f64)> {
        let m = self.measure();
        let v = crate::numerics::integrate_vec(
            |w, out: &mut [f64]| {
                out[0] = 1.0;
                out[1] = w;
            },
            2,
            &m,
            &[],
            DEFAULT_TOL,
        )?;
        Ok((v[0], v[1]))
    }

    /// Checks the spectral constraints (probability measure, mean 1/2).
    pub fn validate(&self, tol: f64) -> Result<()> {
        let (mass, mean) = self.mass_and_mean()?;
        if (mass - 1.0).abs() > tol || (mean - 0.5).abs() > tol {
            return Err(Error::InvalidParameter(format!(
                "not a spectral distribution: mass {mass}, mean {mean}"
            )));
        }
        Ok(())
    }
}

/// ET endpoint atom, `(1 - F_{a+1}(ρ √((a+1)/(1-ρ²)))) / 2` at each end.
fn et_atom(rho: f64, a: f64) -> f64 {
    let x = rho * ((a + 1.0) / (1.0 - rho * rho)).sqrt();
    0.5 * student_t_cdf(-x, a + 1.0)
}

/// `X(z) = 2{(1-z)ω ∨ z(1-ω)}`.
pub fn pickands_x(z: f64, w: f64) -> f64 {
    2.0 * ((1.0 - z) * w).max(z * (1.0 - w))
}

/// Standard normal density, re-exported for callers building HR quantities.
pub fn phi(x: f64) -> f64 {
    norm_pdf(x)
}

impl fmt::Display for SpectralModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::HuslerReiss { lambda } => write!(f, "HR({lambda})"),
            Self::AsymmetricLogistic { a, b1, b2 } => write!(f, "AL({a},{b1},{b2})"),
            Self::ExtremalT { rho, a } => write!(f, "ET({rho},{a})"),
            Self::Empirical(ref m) => write!(f, "Empirical({} atoms)", m.atoms().len()),
        }
    }
}

impl FromStr for SpectralModel {
    type Err = Error;
    /// Parses `HR(0.6)`, `AL(0.4,0.7,1)`, `ET(0.65,1.21)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let open = s
            .find('(')
            .ok_or_else(|| Error::InvalidInput(format!("model '{s}' lacks '(params)'")))?;
        if !s.ends_with(')') {
            return Err(Error::InvalidInput(format!("model '{s}' lacks closing ')'")));
        }
        let family: Family = s[..open].parse()?;
        let params = s[open + 1..s.len() - 1]
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("bad parameter '{t}' in '{s}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_params(family, &params)
    }
}
