use crate::divergence::DominatingMeasure;
use crate::numerics::quadrature::{quad_vec, MAX_SUBDIVISIONS};
use crate::numerics::{brent, AtomicMeasure};
use crate::spectral::SpectralModel;
use crate::{Error, Result};

/// Absolute tolerance of the moment integrals.
pub(crate) const QUAD_TOL: f64 = 1e-11;

/// Scan cells per piece when the kink function is not piecewise linear.
const SCAN_CELLS: usize = 400;

/// Reference model, evaluation point and dominating measure, with
/// `L = dP/dμ` on the continuous part and at the atoms of `μ`.
#[derive(Clone)]
pub(crate) struct Setting {
    pub p: SpectralModel,
    pub z: f64,
    mu: DominatingMeasure,
    mu_measure: AtomicMeasure,
    /// Atoms of `μ` as `(location, μ-mass, L)`.
    pub atoms: Vec<(f64, f64, f64)>,
    breaks: Vec<f64>,
}

impl Setting {
    pub fn new(p: &SpectralModel, z: f64, mu: &DominatingMeasure) -> Result<Self> {
        if !(0.0..=1.0).contains(&z) {
            return Err(Error::InvalidInput(format!("z = {z} outside [0, 1]")));
        }
        let mu_measure = mu.resolve(p);
        if p.has_density() && mu_measure.density().is_none() {
            return Err(Error::NotDominated(
                "reference model has a density but μ has no continuous part".into(),
            ));
        }
        for a in p.atoms().iter().filter(|a| a.mass > 0.0) {
            if mu_measure.atom_mass_at(a.loc) <= 0.0 {
                return Err(Error::NotDominated(format!(
                    "reference atom at {} carries no μ-mass",
                    a.loc
                )));
            }
        }
        let atoms = mu_measure
            .atoms()
            .iter()
            .filter(|a| a.mass > 0.0)
            .map(|a| (a.loc, a.mass, p.atom_mass_at(a.loc) / a.mass))
            .collect();
        let mut breaks: Vec<f64> = mu_measure.breaks().to_vec();
        if let SpectralModel::Empirical(m) = p {
            breaks.extend_from_slice(m.breaks());
        }
        if z > 0.0 && z < 1.0 {
            breaks.push(z);
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        Ok(Self {
            p: p.clone(),
            z,
            mu: mu.clone(),
            mu_measure,
            atoms,
            breaks,
        })
    }

    pub fn is_reference(&self) -> bool {
        self.mu.is_reference()
    }

    pub fn has_continuous(&self) -> bool {
        self.mu_measure.density().is_some()
    }

    /// Density of the continuous part of `μ`.
    pub fn mu_density(&self, w: f64, wc: f64) -> f64 {
        match &self.mu {
            DominatingMeasure::ReferenceP => {
                if self.p.has_density() {
                    self.p.density_pair(w, wc)
                } else {
                    0.0
                }
            }
            DominatingMeasure::Lebesgue => 1.0,
            DominatingMeasure::Custom(_) => self.mu_measure.density().map_or(0.0, |d| d(w, wc)),
        }
    }

    /// `L` on the continuous part.
    pub fn l(&self, w: f64, wc: f64) -> f64 {
        match &self.mu {
            DominatingMeasure::ReferenceP => 1.0,
            _ => {
                if !self.p.has_density() {
                    return 0.0;
                }
                let d = self.mu_density(w, wc);
                if d > 0.0 {
                    self.p.density_pair(w, wc) / d
                } else {
                    0.0
                }
            }
        }
    }

    /// `∫ f(ω, 1-ω, L(ω)) dμ(ω)` componentwise. The flag reports whether the
    /// adaptive quadrature met its tolerance.
    pub fn expect<F: Fn(f64, f64, f64, &mut [f64])>(&self, f: F, dim: usize, extra_breaks: &[f64]) -> (Vec<f64>, bool) {
        let mut breaks = self.breaks.clone();
        breaks.extend_from_slice(extra_breaks);
        let (mut total, converged) = if self.mu_measure.density().is_some() {
            let out = quad_vec(
                |w, wc, buf: &mut [f64]| {
                    let d = self.mu_density(w, wc);
                    if d == 0.0 || !d.is_finite() {
                        buf.iter_mut().for_each(|v| *v = 0.0);
                        return;
                    }
                    f(w, wc, self.l(w, wc), buf);
                    buf.iter_mut().for_each(|v| *v *= d);
                },
                dim,
                0.0,
                1.0,
                &breaks,
                QUAD_TOL,
                MAX_SUBDIVISIONS,
            );
            (out.value, out.converged)
        } else {
            (vec![0.0; dim], true)
        };
        let mut buf = vec![0.0; dim];
        for &(loc, mass, l) in &self.atoms {
            f(loc, 1.0 - loc, l, &mut buf);
            for i in 0..dim {
                total[i] += mass * buf[i];
            }
        }
        let finite = total.iter().all(|v| v.is_finite());
        (total, converged && finite)
    }

    /// Zeros of `h(ω, 1-ω, L(ω))` on the continuous part, used as quadrature
    /// breaks. When `L` is constant, `h` is assumed linear between the kinks
    /// of `X` and each piece is checked at its ends only.
    pub fn kinks(&self, h: impl Fn(f64, f64, f64) -> f64) -> Vec<f64> {
        if self.mu_measure.density().is_none() {
            return Vec::new();
        }
        let cells = if self.is_reference() { 1 } else { SCAN_CELLS };
        let mut nodes = vec![0.0, 1.0];
        nodes.extend(self.breaks.iter().copied());
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        let g = |w: f64| h(w, 1.0 - w, self.l(w, 1.0 - w));
        let mut roots = Vec::new();
        for piece in nodes.windows(2) {
            let (a, b) = (piece[0], piece[1]);
            let mut prev = (a, g(a));
            for i in 1..=cells {
                let x = if i == cells { b } else { a + (b - a) * i as f64 / cells as f64 };
                let cur = (x, g(x));
                if prev.1 * cur.1 < 0.0 {
                    if let Ok(r) = brent(g, prev.0, cur.0, 1e-15, 200) {
                        roots.push(r);
                    }
                }
                prev = cur;
            }
        }
        roots
    }

    /// Whether `x` lies in the support of `μ`.
    pub fn in_support(&self, x: f64) -> bool {
        if self.atoms.iter().any(|&(loc, _, _)| loc == x) {
            return true;
        }
        if self.mu_measure.density().is_none() {
            return false;
        }
        [1e-7, 1e-4].iter().any(|&h| {
            [x - h, x + h]
                .iter()
                .any(|&w| w > 0.0 && w < 1.0 && self.mu_density(w, 1.0 - w) > 0.0)
        })
    }

    /// Grid over the continuous support of `μ`, including `z` and points
    /// next to `0` and `1`. Where the density of `μ` vanishes at an end, the
    /// point is moved inside so that `L` takes its limiting value.
    pub fn support_grid(&self, n: usize) -> Vec<f64> {
        if self.mu_measure.density().is_none() {
            return Vec::new();
        }
        let mut g: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        g.push(self.z);
        g.sort_by(f64::total_cmp);
        g.dedup();
        g.retain(|&w| self.in_support(w));
        for w in g.iter_mut() {
            if *w == 0.0 && self.mu_density(0.0, 1.0) == 0.0 {
                *w = 1e-9;
            } else if *w == 1.0 && self.mu_density(1.0, 0.0) == 0.0 {
                *w = 1.0 - 1e-9;
            }
        }
        g
    }
}
