//! The divergence `D_μ(Q, P) = E_μ (L' - L)²` between spectral models and
//! its plug-in estimate from angular data.
//!
//! With `μ = P` this is `E_P L'² - 1`, the χ² distance, and the ball
//! `{D ≤ δ}` is the order-2 Rényi ball of radius `log(1 + δ)`. With `μ`
//! Lebesgue it is the squared `L²` distance of the densities.

use crate::inference::AngularSample;
use crate::numerics::{integrate_outcome, Atom, AtomicMeasure};
use crate::spectral::{SpectralModel, GRID_NODES};
use crate::{Error, Result};

/// Absolute tolerance of the divergence integral.
const DIVERGENCE_TOL: f64 = 1e-11;

/// The dominating measure `μ` defining the divergence geometry.
#[derive(Debug, Clone)]
pub enum DominatingMeasure {
    /// The reference model itself (`L ≡ 1`).
    ReferenceP,
    Lebesgue,
    Custom(AtomicMeasure),
}

impl DominatingMeasure {
    /// The measure `μ` for reference model `p`.
    pub fn resolve(&self, p: &SpectralModel) -> AtomicMeasure {
        match self {
            Self::ReferenceP => p.measure(),
            Self::Lebesgue => AtomicMeasure::lebesgue(),
            Self::Custom(m) => m.clone(),
        }
    }

    pub fn is_reference(&self) -> bool {
        matches!(self, Self::ReferenceP)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::ReferenceP => "P",
            Self::Lebesgue => "Leb",
            Self::Custom(_) => "custom",
        }
    }
}

impl std::str::FromStr for DominatingMeasure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "p" | "reference" => Ok(Self::ReferenceP),
            "leb" | "lebesgue" => Ok(Self::Lebesgue),
            other => Err(Error::InvalidInput(format!("unknown dominating measure '{other}'"))),
        }
    }
}

/// Log-density of `μ` at `(ω, 1-ω)`; `-∞` where it vanishes.
fn log_mu(mu: &DominatingMeasure, p: &SpectralModel, m: &AtomicMeasure, w: f64, wc: f64) -> f64 {
    match mu {
        DominatingMeasure::ReferenceP => p.log_density_pair(w, wc),
        DominatingMeasure::Lebesgue => 0.0,
        DominatingMeasure::Custom(_) => m.density().map_or(f64::NEG_INFINITY, |d| d(w, wc).ln()),
    }
}

/// `(e^a - e^b)² / e^g`, evaluated without cancellation or overflow in the
/// intermediate terms.
fn sq_diff_ratio(la: f64, lb: f64, lg: f64) -> f64 {
    let hi = la.max(lb);
    let lo = la.min(lb);
    if hi == f64::NEG_INFINITY || la == lb {
        return 0.0;
    }
    if lg == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    let d = (lo - hi).exp_m1();
    (2.0 * hi - lg).exp() * d * d
}

fn atom_terms(q: &SpectralModel, p: &SpectralModel, mu_atoms: &[Atom]) -> Result<f64> {
    let qa: Vec<Atom> = q.atoms().into_iter().filter(|a| a.mass > 0.0).collect();
    let pa: Vec<Atom> = p.atoms().into_iter().filter(|a| a.mass > 0.0).collect();
    let mass_of = |v: &[Atom], loc: f64| v.iter().filter(|a| a.loc == loc).map(|a| a.mass).sum::<f64>();
    for a in &pa {
        if mass_of(mu_atoms, a.loc) <= 0.0 {
            return Err(Error::NotDominated(format!(
                "reference atom at {} carries no dominating mass",
                a.loc
            )));
        }
    }
    if qa.iter().any(|a| mass_of(mu_atoms, a.loc) <= 0.0) {
        return Ok(f64::INFINITY);
    }
    let mut s = 0.0;
    for m in mu_atoms.iter().filter(|a| a.mass > 0.0) {
        let d = mass_of(&qa, m.loc) - mass_of(&pa, m.loc);
        s += d * d / m.mass;
    }
    Ok(s)
}

/// `D_μ(q, p) = E_μ(L' - L)²`, with `f64::INFINITY` when `q` is not
/// dominated by `μ` or the integral diverges.
///
/// Errors when the reference `p` itself is not dominated by `μ`.
pub fn divergence(q: &SpectralModel, p: &SpectralModel, mu: &DominatingMeasure) -> Result<f64> {
    let m = mu.resolve(p);
    let atoms = atom_terms(q, p, m.atoms())?;
    if atoms.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let (qd, pd) = (q.has_density(), p.has_density());
    if m.density().is_none() {
        if pd {
            return Err(Error::NotDominated("reference density but μ has no density".into()));
        }
        if qd {
            return Ok(f64::INFINITY);
        }
        return Ok(atoms);
    }
    if !qd && !pd {
        return Ok(atoms);
    }
    let mut breaks: Vec<f64> = m.breaks().to_vec();
    for mm in [q, p] {
        if let SpectralModel::Empirical(e) = mm {
            breaks.extend_from_slice(e.breaks());
        }
    }
    let lebesgue = AtomicMeasure::lebesgue();
    let out = integrate_outcome(
        |w, wc, out: &mut [f64]| {
            let lq = if qd { q.log_density_pair(w, wc) } else { f64::NEG_INFINITY };
            let lp = if pd { p.log_density_pair(w, wc) } else { f64::NEG_INFINITY };
            out[0] = sq_diff_ratio(lq, lp, log_mu(mu, p, &m, w, wc));
        },
        1,
        &lebesgue,
        &breaks,
        DIVERGENCE_TOL,
    );
    let v = out.value[0];
    if !v.is_finite() {
        return Ok(f64::INFINITY);
    }
    if !out.converged && out.error > 1e-3 * v.abs().max(1e-12) {
        return Ok(f64::INFINITY);
    }
    Ok(v + atoms)
}

/// Radius of the order-2 Rényi ball equivalent to `D_P ≤ δ`.
pub fn renyi2_radius(delta: f64) -> f64 {
    delta.ln_1p()
}

/// Silverman's rule of thumb, `0.9 min(sd, IQR/1.34) n^{-1/5}`.
pub fn silverman_bandwidth(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 {
        return 0.1;
    }
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let h = p * (n - 1.0);
        let i = h.floor() as usize;
        let f = h - i as f64;
        s[i] + f * (s[(i + 1).min(s.len() - 1)] - s[i])
    };
    let iqr = q(0.75) - q(0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    (0.9 * spread * n.powf(-0.2)).max(1e-3)
}

/// Boundary-reflected Gaussian kernel estimate of the angle law: a density
/// tabulated on the uniform grid plus the empirical endpoint frequencies.
pub fn kernel_model(sample: &AngularSample, bandwidth: Option<f64>) -> Result<SpectralModel> {
    let k = sample.len();
    if k == 0 {
        return Err(Error::InvalidInput("empty angular sample".into()));
    }
    let interior = sample.interior();
    let (c0, c1) = (sample.count0(), sample.count1());
    let mut atoms = Vec::new();
    if c0 > 0 {
        atoms.push(Atom::new(0.0, c0 as f64 / k as f64));
    }
    if c1 > 0 {
        atoms.push(Atom::new(1.0, c1 as f64 / k as f64));
    }
    if interior.is_empty() {
        return SpectralModel::from_atoms(atoms);
    }
    let h = bandwidth.unwrap_or_else(|| silverman_bandwidth(&interior));
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("bandwidth {h} must be positive")));
    }
    let norm = 1.0 / (k as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let kern = |u: f64| (-0.5 * u * u).exp();
    let grid: Vec<f64> = (0..GRID_NODES)
        .map(|i| {
            let x = i as f64 / (GRID_NODES - 1) as f64;
            norm * interior
                .iter()
                .map(|&w| kern((x - w) / h) + kern((x + w) / h) + kern((x - 2.0 + w) / h))
                .sum::<f64>()
        })
        .collect();
    // Renormalise the tabulated continuous part to its exact share.
    let hstep = 1.0 / (GRID_NODES - 1) as f64;
    let trap = hstep * (grid.iter().sum::<f64>() - 0.5 * (grid[0] + grid[GRID_NODES - 1]));
    let share = interior.len() as f64 / k as f64;
    let grid: Vec<f64> = grid.into_iter().map(|g| g * share / trap).collect();
    SpectralModel::from_grid(grid, atoms)
}

/// Plug-in estimate `D_μ(P̂_data, p)` with a kernel estimate of the data law.
pub fn estimate_divergence(
    sample: &AngularSample,
    p: &SpectralModel,
    mu: &DominatingMeasure,
    bandwidth: Option<f64>,
) -> Result<f64> {
    if sample.len() < 50 {
        return Err(Error::InvalidInput(format!(
            "divergence estimate needs at least 50 angles, got {}",
            sample.len()
        )));
    }
    let est = kernel_model(sample, bandwidth)?;
    divergence(&est, p, mu)
}
