use nalgebra::{DMatrix, DVector};

use crate::divergence::DominatingMeasure;
use crate::numerics::golden_section;
use crate::spectral::{pickands_x, SpectralModel};
use crate::{Error, Result};

use super::setting::Setting;
use super::Direction;

/// `det Σ_μ(X,Y) / det Σ_μ(Y)` below this counts as zero: `X` is then an
/// affine function of `Y` and `E' X` is pinned by the constraints.
pub(crate) const DET_EPS: f64 = 1e-14;

const GRID: usize = 4000;

/// `μ`-moments of `(X, Y)`.
///
/// The centred second moments are taken with respect to `μ` itself (not
/// normalised by its mass), so that the square-root bound holds for any
/// finite dominating measure.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSummary {
    /// `E X` under the reference model, the centre of every bound.
    pub e_x: f64,
    /// `E Y₁` under the reference model.
    pub e_y: f64,
    /// `E_μ X / μ(Ω)`.
    pub mean_x: f64,
    /// `E_μ Y₁ / μ(Ω)`.
    pub mean_y: f64,
    pub var_x: f64,
    pub cov_xy: f64,
    pub var_y: f64,
    /// `det Σ_μ(X,Y) / det Σ_μ(Y)`, as the Schur complement.
    pub det_ratio: f64,
    /// Total mass of `μ`.
    pub mass: f64,
    /// Full `Σ_μ(X, Y)`, `X` first.
    pub cov: DMatrix<f64>,
}

impl MomentSummary {
    /// Summary from a mean vector and covariance of `(X, Y₁, …, Y_{d-1})`.
    ///
    /// With no constraints (`d = 1`) the ratio is `var X`.
    pub fn from_covariance(e_x: f64, mean: &[f64], cov: DMatrix<f64>, mass: f64) -> Result<Self> {
        let d = cov.nrows();
        if d == 0 || cov.ncols() != d || mean.len() != d {
            return Err(Error::InvalidInput("covariance must be square and match the mean".into()));
        }
        let det_ratio = schur_ratio(&cov)?;
        Ok(Self {
            e_x,
            e_y: mean.get(1).copied().unwrap_or(f64::NAN),
            mean_x: mean[0],
            mean_y: mean.get(1).copied().unwrap_or(f64::NAN),
            var_x: cov[(0, 0)],
            cov_xy: if d > 1 { cov[(0, 1)] } else { 0.0 },
            var_y: if d > 1 { cov[(1, 1)] } else { f64::NAN },
            det_ratio,
            mass,
            cov,
        })
    }

    /// Regression coefficients `Σ_μ(Y)⁻¹ cov_μ(Y, X)`.
    pub fn beta(&self) -> Vec<f64> {
        let d = self.cov.nrows();
        if d == 1 {
            return Vec::new();
        }
        let sy = self.cov.view((1, 1), (d - 1, d - 1)).into_owned();
        let s = DVector::from_iterator(d - 1, (1..d).map(|i| self.cov[(i, 0)]));
        sy.lu().solve(&s).map_or_else(|| vec![f64::NAN; d - 1], |v| v.iter().copied().collect())
    }
}

/// `var X - σᵀ Σ_Y⁻¹ σ`, clamped at zero.
fn schur_ratio(cov: &DMatrix<f64>) -> Result<f64> {
    let d = cov.nrows();
    if d == 1 {
        return Ok(cov[(0, 0)].max(0.0));
    }
    let sy = cov.view((1, 1), (d - 1, d - 1)).into_owned();
    let s = DVector::from_iterator(d - 1, (1..d).map(|i| cov[(i, 0)]));
    let chol = sy
        .cholesky()
        .ok_or_else(|| Error::Degenerate("constraint covariance Σ_μ(Y) is singular".into()))?;
    let v = chol.solve(&s);
    Ok((cov[(0, 0)] - s.dot(&v)).max(0.0))
}

pub(crate) fn moments_in(s: &Setting) -> Result<MomentSummary> {
    let z = s.z;
    let (v, converged) = s.expect(
        |w, _, l, out: &mut [f64]| {
            let x = pickands_x(z, w);
            out[0] = 1.0;
            out[1] = x;
            out[2] = w;
            out[3] = x * x;
            out[4] = x * w;
            out[5] = w * w;
            out[6] = l * x;
            out[7] = l;
            out[8] = l * w;
        },
        9,
        &[],
    );
    if !converged {
        return Err(Error::Quadrature {
            subdivisions: 0,
            estimate: v[6],
            error: f64::NAN,
        });
    }
    if (v[7] - 1.0).abs() > 1e-6 {
        return Err(Error::NotDominated(format!(
            "∫ L dμ = {} ≠ 1: the reference model puts mass outside the support of μ",
            v[7]
        )));
    }
    let mass = v[0];
    let (mx, my) = (v[1] / mass, v[2] / mass);
    let var_x = v[3] - mass * mx * mx;
    let cov_xy = v[4] - mass * mx * my;
    let var_y = v[5] - mass * my * my;
    if !(var_y > DET_EPS) {
        return Err(Error::Degenerate(format!("Y has no spread under μ (var {var_y:e})")));
    }
    let cov = DMatrix::from_row_slice(2, 2, &[var_x, cov_xy, cov_xy, var_y]);
    Ok(MomentSummary {
        e_x: v[6],
        e_y: v[8],
        mean_x: mx,
        mean_y: my,
        var_x,
        cov_xy,
        var_y,
        det_ratio: (var_x - cov_xy * cov_xy / var_y).max(0.0),
        mass,
        cov,
    })
}

/// `μ`-moments of `(X(z), Y)` for the reference `model`.
pub fn moments_for_pickands(model: &SpectralModel, z: f64, mu: &DominatingMeasure) -> Result<MomentSummary> {
    moments_in(&Setting::new(model, z, mu)?)
}

/// `E X ± √(δ · det Σ_μ(X,Y) / det Σ_μ(Y))`.
pub fn sqrt_bound(ms: &MomentSummary, delta: f64, direction: Direction) -> f64 {
    ms.e_x + direction.sign() * (delta.max(0.0) * ms.det_ratio).sqrt()
}

pub(crate) fn delta_star_in(s: &Setting, ms: &MomentSummary, direction: Direction) -> f64 {
    if ms.det_ratio <= DET_EPS {
        return f64::INFINITY;
    }
    let z = s.z;
    let sign = direction.sign();
    let rho = ms.cov_xy / ms.var_y;
    if s.is_reference() && [0.0, z, 1.0].iter().all(|&x| s.in_support(x)) {
        // ρY - X peaks at Y ∈ {0, z, 1} and bottoms out at Y ∈ {0, 1}
        let base = ms.e_x - rho * ms.mean_y;
        return match direction {
            Direction::Upper => {
                let b = base + (-2.0 * z).max(rho * z - 2.0 * z * (1.0 - z)).max(rho - 2.0 * (1.0 - z));
                if b > 0.0 {
                    ms.det_ratio / (b * b)
                } else {
                    f64::INFINITY
                }
            }
            Direction::Lower => {
                let b = base + (-2.0 * z).min(rho - 2.0 * (1.0 - z));
                if b < 0.0 {
                    ms.det_ratio / (b * b)
                } else {
                    f64::INFINITY
                }
            }
        };
    }
    // δ* = det-ratio · (ess inf over {R > 0} of L/R)², with R the
    // violation of the square-root optimiser's nonnegativity.
    let r = |w: f64| -sign * (pickands_x(z, w) - ms.mean_x - rho * (w - ms.mean_y));
    let ratio = |w: f64| {
        let rw = r(w);
        if rw > 0.0 {
            s.l(w, 1.0 - w) / rw
        } else {
            f64::INFINITY
        }
    };
    let mut best = f64::INFINITY;
    for &(loc, _, l) in &s.atoms {
        let rw = r(loc);
        if rw > 0.0 {
            best = best.min(l / rw);
        }
    }
    let grid = s.support_grid(GRID);
    if !grid.is_empty() {
        let vals: Vec<f64> = grid.iter().map(|&w| ratio(w)).collect();
        let i = (0..grid.len()).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
        best = best.min(vals[i]);
        if vals[i].is_finite() && vals[i] > 0.0 {
            let lo = grid[i.saturating_sub(1)];
            let hi = grid[(i + 1).min(grid.len() - 1)];
            let (_, v) = golden_section(ratio, lo, hi, 1e-12);
            best = best.min(v);
        }
    }
    if best.is_finite() {
        ms.det_ratio * best * best
    } else {
        f64::INFINITY
    }
}

/// Largest `δ` for which the square-root bound is exact.
pub fn delta_star(model: &SpectralModel, z: f64, mu: &DominatingMeasure, direction: Direction) -> Result<f64> {
    let s = Setting::new(model, z, mu)?;
    let ms = moments_in(&s)?;
    Ok(delta_star_in(&s, &ms, direction))
}
