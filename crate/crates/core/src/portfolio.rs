//! Robust bounds on the asymptotic Value-at-Risk of a portfolio of
//! heavy-tailed losses.
//!
//! For losses regularly varying with index `α`, scale constants `mᵢ` and
//! portfolio weights `wᵢ`, `(VaR_P(p) / VaR₁(p))^α → d·E X` as `p → 0`, where
//! `X = (Σ wᵢ (mᵢ Ŷᵢ)^{1/α})^α` and `Ŷ` is the standardised spectral vector
//! on the simplex with `E Ŷᵢ = 1/d`. Bounds on `E X` over a divergence ball
//! with the `d - 1` moment constraints map to bounds on the ratio
//! `(d·E X)^{1/α}`.
//!
//! Moments come from Monte Carlo samples of `Ŷ`, generated in parallel
//! blocks on split random streams. The same blocks serve as the groups of a
//! delete-one-block jackknife.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::dual::{newton_min, Eval};
use crate::bounds::{Direction, MomentSummary};
use crate::numerics::RngState;
use crate::spectral::{AngleSampler, SpectralModel};
use crate::{Error, Result};

/// Default Monte Carlo sample size.
pub const DEFAULT_N: usize = 1_000_000;
/// Number of jackknife groups.
pub const JACKKNIFE_BLOCKS: usize = 100;
/// Smallest accepted sample size.
pub const MIN_N: usize = 1000;

const GTOL: f64 = 1e-10;
const MAX_NEWTON: usize = 200;
const CHUNK: usize = 8192;

/// Law of the standardised spectral vector `Ŷ` on the simplex.
#[derive(Debug, Clone)]
pub enum SimplexSampler {
    /// Symmetric Dirichlet(β, …, β).
    Dirichlet { beta: f64 },
    /// Finitely many points of the simplex with their probabilities.
    Atoms { points: Vec<Vec<f64>>, probs: Vec<f64> },
    /// `(ω, 1 - ω)` with `ω` drawn from a bivariate spectral model.
    Bivariate(SpectralModel),
}

impl SimplexSampler {
    /// All mass at the centre of the simplex (complete dependence).
    pub fn comonotone(d: usize) -> Self {
        Self::Atoms {
            points: vec![vec![1.0 / d as f64; d]],
            probs: vec![1.0],
        }
    }

    /// Mass `1/d` at each vertex (asymptotic independence).
    pub fn independent(d: usize) -> Self {
        let points = (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::Atoms {
            points,
            probs: vec![1.0 / d as f64; d],
        }
    }

    fn laws(&self) -> Result<(Option<Gamma<f64>>, Option<AngleSampler>)> {
        Ok(match self {
            Self::Dirichlet { beta } => (
                Some(Gamma::new(*beta, 1.0).map_err(|e| Error::InvalidParameter(e.to_string()))?),
                None,
            ),
            Self::Bivariate(m) => (None, Some(AngleSampler::new(m)?)),
            Self::Atoms { .. } => (None, None),
        })
    }

    /// `n` points of the `d`-simplex, on a single stream.
    pub fn sample(&self, d: usize, n: usize, rng: RngState) -> Result<Vec<Vec<f64>>> {
        self.check(d)?;
        let (gamma, angle) = self.laws()?;
        let mut r = rng.rng();
        Ok((0..n)
            .map(|_| {
                let mut y = vec![0.0; d];
                draw_point(self, d, gamma.as_ref(), angle.as_ref(), &mut r, &mut y);
                y
            })
            .collect())
    }

    fn check(&self, d: usize) -> Result<()> {
        match self {
            Self::Dirichlet { beta } => {
                if !(*beta > 0.0) || !beta.is_finite() {
                    return Err(Error::InvalidParameter(format!("Dirichlet β = {beta} must be positive")));
                }
            }
            Self::Atoms { points, probs } => {
                if points.is_empty() || points.len() != probs.len() {
                    return Err(Error::InvalidParameter("atoms need one probability per point".into()));
                }
                if probs.iter().any(|p| !(*p >= 0.0)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter("atom probabilities must be nonnegative and sum to 1".into()));
                }
                for p in points {
                    if p.len() != d || p.iter().any(|v| !(*v >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                        return Err(Error::InvalidParameter(format!("atom {p:?} is not on the {d}-simplex")));
                    }
                }
                for i in 0..d {
                    let m: f64 = points.iter().zip(probs).map(|(p, q)| q * p[i]).sum();
                    if (m - 1.0 / d as f64).abs() > 1e-9 {
                        return Err(Error::InvalidParameter(format!(
                            "atoms give E Ŷ{} = {m}, not 1/{d}",
                            i + 1
                        )));
                    }
                }
            }
            Self::Bivariate(m) => {
                if d != 2 {
                    return Err(Error::InvalidParameter("a bivariate spectral model needs d = 2".into()));
                }
                m.validate(1e-6)?;
            }
        }
        Ok(())
    }
}

/// Portfolio weights, tail index, scale constants and spectral law.
#[derive(Debug, Clone)]
pub struct PortfolioSpec {
    pub weights: Vec<f64>,
    pub alpha: f64,
    /// `mᵢ`, with `m₁ = 1`.
    pub scales: Vec<f64>,
    pub sampler: SimplexSampler,
}

impl PortfolioSpec {
    pub fn new(weights: Vec<f64>, alpha: f64, scales: Vec<f64>, sampler: SimplexSampler) -> Result<Self> {
        let d = weights.len();
        if d < 2 {
            return Err(Error::InvalidParameter(format!("portfolio dimension {d} must be at least 2")));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) || weights.iter().all(|w| *w == 0.0) {
            return Err(Error::InvalidParameter("weights must be finite, nonnegative and not all zero".into()));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("tail index α = {alpha} must be positive")));
        }
        if scales.len() != d || scales.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
            return Err(Error::InvalidParameter("need d positive scale constants".into()));
        }
        if scales[0] != 1.0 {
            return Err(Error::InvalidParameter(format!("scale constants are relative to the first, m₁ = {}", scales[0])));
        }
        sampler.check(d)?;
        Ok(Self {
            weights,
            alpha,
            scales,
            sampler,
        })
    }

    /// Equal unit scales.
    pub fn with_unit_scales(weights: Vec<f64>, alpha: f64, sampler: SimplexSampler) -> Result<Self> {
        let d = weights.len();
        Self::new(weights, alpha, vec![1.0; d], sampler)
    }

    pub fn d(&self) -> usize {
        self.weights.len()
    }

    /// `(d·x)^{1/α}`, the asymptotic VaR ratio for `E X = x`.
    pub fn ratio(&self, ex: f64) -> f64 {
        (self.d() as f64 * ex.max(0.0)).powf(1.0 / self.alpha)
    }
}

/// `X = (Σ wᵢ (mᵢ yᵢ)^{1/α})^α` at a point `y` of the simplex.
pub fn portfolio_statistic(y: &[f64], spec: &PortfolioSpec) -> f64 {
    let p = 1.0 / spec.alpha;
    let s: f64 = y
        .iter()
        .zip(&spec.weights)
        .zip(&spec.scales)
        .map(|((&yi, &w), &m)| if w == 0.0 || yi == 0.0 { 0.0 } else { w * (m * yi).powf(p) })
        .sum();
    s.powf(spec.alpha)
}

/// Monte Carlo sample of `(X, Ŷ₁, …, Ŷ_{d-1})`, row-major, in jackknife
/// blocks.
#[derive(Debug, Clone)]
pub struct McSample {
    /// Row width, `d`.
    pub width: usize,
    pub rows: Vec<f64>,
    /// Row offsets of the blocks, `blocks.len() = JACKKNIFE_BLOCKS + 1`.
    pub blocks: Vec<usize>,
}

impl McSample {
    pub fn len(&self) -> usize {
        self.rows.len() / self.width
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.width..(i + 1) * self.width]
    }
}

fn draw_point<R: rand::Rng + ?Sized>(
    sampler: &SimplexSampler,
    d: usize,
    gamma: Option<&Gamma<f64>>,
    angle: Option<&AngleSampler>,
    rng: &mut R,
    y: &mut [f64],
) {
    match sampler {
        SimplexSampler::Dirichlet { .. } => {
            let g = gamma.expect("gamma law");
            let mut s = 0.0;
            for v in y.iter_mut() {
                *v = g.sample(rng);
                s += *v;
            }
            for v in y[..d - 1].iter_mut() {
                *v /= s;
            }
            // the last coordinate closes the sum
            y[d - 1] = (1.0 - y[..d - 1].iter().sum::<f64>()).max(0.0);
        }
        SimplexSampler::Atoms { points, probs } => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut k = points.len() - 1;
            for (i, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    k = i;
                    break;
                }
            }
            y.copy_from_slice(&points[k]);
        }
        SimplexSampler::Bivariate(_) => {
            let w = angle.expect("angle sampler").draw(rng);
            y[0] = w;
            y[1] = 1.0 - w;
        }
    }
}

/// Draws `n` points of `Ŷ` and evaluates `X` at each.
pub fn simulate(spec: &PortfolioSpec, n: usize, rng: RngState) -> Result<McSample> {
    if n < MIN_N {
        return Err(Error::InvalidInput(format!("Monte Carlo needs n ≥ {MIN_N}, got {n}")));
    }
    let d = spec.d();
    let (gamma, angle) = spec.sampler.laws()?;
    let nb = JACKKNIFE_BLOCKS;
    let blocks: Vec<usize> = (0..=nb).map(|b| b * (n / nb) + b.min(n % nb)).collect();
    let parts: Vec<Vec<f64>> = (0..nb)
        .into_par_iter()
        .map(|b| {
            let mut r = rng.substream(b as u64).rng();
            let len = blocks[b + 1] - blocks[b];
            let mut out = Vec::with_capacity(len * d);
            let mut y = vec![0.0; d];
            for _ in 0..len {
                draw_point(&spec.sampler, d, gamma.as_ref(), angle.as_ref(), &mut r, &mut y);
                out.push(portfolio_statistic(&y, spec));
                out.extend_from_slice(&y[..d - 1]);
            }
            out
        })
        .collect();
    Ok(McSample {
        width: d,
        rows: parts.concat(),
        blocks,
    })
}

/// Count, mean and centred cross-product matrix of a set of rows.
#[derive(Debug, Clone)]
struct Stats {
    n: f64,
    mean: DVector<f64>,
    m2: DMatrix<f64>,
}

impl Stats {
    fn of(rows: &[f64], width: usize) -> Self {
        let n = rows.len() / width;
        let mut mean = DVector::zeros(width);
        for r in rows.chunks_exact(width) {
            for j in 0..width {
                mean[j] += r[j];
            }
        }
        mean /= n.max(1) as f64;
        let mut m2 = DMatrix::zeros(width, width);
        for r in rows.chunks_exact(width) {
            for i in 0..width {
                let di = r[i] - mean[i];
                for j in 0..=i {
                    m2[(i, j)] += di * (r[j] - mean[j]);
                }
            }
        }
        for i in 0..width {
            for j in 0..i {
                m2[(j, i)] = m2[(i, j)];
            }
        }
        Self { n: n as f64, mean, m2 }
    }

    fn merge(&self, other: &Self) -> Self {
        let n = self.n + other.n;
        let delta = &other.mean - &self.mean;
        let mean = &self.mean + &delta * (other.n / n);
        let m2 = &self.m2 + &other.m2 + &delta * delta.transpose() * (self.n * other.n / n);
        Self { n, mean, m2 }
    }

    /// Statistics of the rows in `self` but not in `part`.
    fn remove(&self, part: &Self) -> Self {
        let n = self.n - part.n;
        let mean = (&self.mean * self.n - &part.mean * part.n) / n;
        let delta = &part.mean - &mean;
        let m2 = &self.m2 - &part.m2 - &delta * delta.transpose() * (n * part.n / self.n);
        Self { n, mean, m2 }
    }

    fn cov(&self) -> DMatrix<f64> {
        &self.m2 / self.n
    }
}

/// Deterministic pairwise reduction.
fn merge_all(mut v: Vec<Stats>) -> Stats {
    while v.len() > 1 {
        v = v
            .chunks(2)
            .map(|c| if c.len() == 2 { c[0].merge(&c[1]) } else { c[0].clone() })
            .collect();
    }
    v.pop().expect("at least one block")
}

/// `var X - sᵀ Σ⁺ s` over the first `j` constraints, with the pseudo-inverse
/// of `Σ = Σ(Ŷ₁..Ŷ_j)`. The flag reports a singular `Σ`.
fn schur_pinv(cov: &DMatrix<f64>, j: usize) -> (f64, bool) {
    let vx = cov[(0, 0)];
    if j == 0 {
        return (vx.max(0.0), false);
    }
    let sy = cov.view((1, 1), (j, j)).into_owned();
    let s = DVector::from_iterator(j, (1..=j).map(|i| cov[(i, 0)]));
    let eig = sy.symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cut = 1e-12 * top.max(1e-300);
    let mut singular = top == 0.0;
    let mut q = 0.0;
    for k in 0..j {
        let ev = eig.eigenvalues[k];
        if ev > cut {
            let proj = eig.eigenvectors.column(k).dot(&s);
            q += proj * proj / ev;
        } else {
            singular = true;
        }
    }
    // a singular Σ(Ŷ) collapses the bounds to E X
    (if singular { 0.0 } else { (vx - q).max(0.0) }, singular)
}

/// Monte Carlo moments of `(X, Ŷ₁, …, Ŷ_{d-1})` under the sample measure.
#[derive(Debug, Clone)]
pub struct McMoments {
    pub n: usize,
    /// Covariance of `(X, Ŷ₁..Ŷ_{d-1})`, `det_ratio` with all `d - 1`
    /// constraints.
    pub summary: MomentSummary,
    /// Jackknife standard error of the det ratio.
    pub det_ratio_se: f64,
    /// Monte Carlo standard error of `E X`.
    pub e_x_se: f64,
    /// `Σ(Ŷ)` was singular; the pseudo-inverse was used.
    pub singular: bool,
    /// Smallest and largest sampled `X`.
    pub x_range: (f64, f64),
    /// `(E X, det ratio)` with each block left out.
    pub replicates: Vec<(f64, f64)>,
}

impl McMoments {
    pub fn from_sample(s: &McSample) -> Self {
        let w = s.width;
        let parts: Vec<Stats> = (0..s.blocks.len() - 1)
            .into_par_iter()
            .map(|b| Stats::of(&s.rows[s.blocks[b] * w..s.blocks[b + 1] * w], w))
            .collect();
        let total = merge_all(parts.clone());
        let cov = total.cov();
        let (det_ratio, singular) = schur_pinv(&cov, w - 1);
        let replicates: Vec<(f64, f64)> = parts
            .iter()
            .filter(|p| p.n > 0.0)
            .map(|p| {
                let loo = total.remove(p);
                (loo.mean[0], schur_pinv(&loo.cov(), w - 1).0)
            })
            .collect();
        let (lo, hi) = s
            .rows
            .chunks_exact(w)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r[0]), b.max(r[0])));
        let mean: Vec<f64> = total.mean.iter().copied().collect();
        let summary = MomentSummary {
            e_x: mean[0],
            e_y: mean[1],
            mean_x: mean[0],
            mean_y: mean[1],
            var_x: cov[(0, 0)],
            cov_xy: cov[(0, 1)],
            var_y: cov[(1, 1)],
            det_ratio,
            mass: 1.0,
            cov: cov.clone(),
        };
        let mut m = Self {
            n: s.len(),
            summary,
            det_ratio_se: 0.0,
            e_x_se: (cov[(0, 0)].max(0.0) / s.len() as f64).sqrt(),
            singular,
            x_range: (lo, hi),
            replicates,
        };
        m.det_ratio_se = m.jackknife_se(|_, det| det);
        m
    }

    /// Det ratio with only the first `j` moment constraints (`j ≤ d - 1`).
    pub fn det_ratio_with(&self, j: usize) -> f64 {
        schur_pinv(&self.summary.cov, j.min(self.summary.cov.nrows() - 1)).0
    }

    /// Jackknife standard error of `f(E X, det ratio)`.
    pub fn jackknife_se(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let b = self.replicates.len() as f64;
        if b < 2.0 {
            return f64::NAN;
        }
        let v: Vec<f64> = self.replicates.iter().map(|&(e, d)| f(e, d)).collect();
        let m = v.iter().sum::<f64>() / b;
        ((b - 1.0) / b * v.iter().map(|x| (x - m).powi(2)).sum::<f64>()).sqrt()
    }

    /// Regression coefficients of `X` on `Ŷ₁..Ŷ_{d-1}` (pseudo-inverse).
    fn beta(&self) -> Vec<f64> {
        let cov = &self.summary.cov;
        let j = cov.nrows() - 1;
        let sy = cov.view((1, 1), (j, j)).into_owned();
        let s = DVector::from_iterator(j, (1..=j).map(|i| cov[(i, 0)]));
        let eps = 1e-12 * sy.amax().max(1e-300);
        let pinv = sy.pseudo_inverse(eps).unwrap_or_else(|_| DMatrix::zeros(j, j));
        (pinv * s).iter().copied().collect()
    }
}

/// Monte Carlo moments of `(X, Ŷ₁, …, Ŷ_{d-1})` from `n` draws.
pub fn mc_moments(spec: &PortfolioSpec, n: usize, rng: RngState) -> Result<McMoments> {
    Ok(McMoments::from_sample(&simulate(spec, n, rng)?))
}

/// Bounds on `E X` and on the asymptotic VaR ratio at one radius.
#[derive(Debug, Clone, Serialize)]
pub struct VarBounds {
    pub delta: f64,
    pub e_x: f64,
    /// `E X ∓ √(δ · det ratio)` before clipping.
    pub sqrt_lower: f64,
    pub sqrt_upper: f64,
    /// Exact bounds on the sample measure, when requested and solved.
    pub exact_lower: Option<f64>,
    pub exact_upper: Option<f64>,
    /// Best available bounds on `E X`, clipped to the sampled range of `X`.
    pub ex_lower: f64,
    pub ex_upper: f64,
    pub clipped_lower: bool,
    pub clipped_upper: bool,
    pub ratio_lower: f64,
    pub ratio_upper: f64,
    /// Jackknife standard errors of the square-root ratio bounds.
    pub ratio_lower_se: f64,
    pub ratio_upper_se: f64,
}

/// Square-root bounds on `E X` clipped to `[lo, hi]`, with clipping flags.
fn clipped_sqrt(e_x: f64, det: f64, delta: f64, range: (f64, f64)) -> (f64, f64, bool, bool) {
    let w = (delta * det).sqrt();
    let (l, u) = (e_x - w, e_x + w);
    (l.max(range.0), u.min(range.1), l < range.0, u > range.1)
}

/// Bounds at `delta` from precomputed moments; with `sample`, the exact
/// bounds on the sample measure are attempted too.
pub fn bounds_from(spec: &PortfolioSpec, m: &McMoments, sample: Option<&McSample>, delta: f64) -> Result<VarBounds> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!("radius δ = {delta} must be finite and nonnegative")));
    }
    let e_x = m.summary.e_x;
    let det = m.summary.det_ratio;
    let w = (delta * det).sqrt();
    let (mut lo, mut hi, mut cl, mut cu) = clipped_sqrt(e_x, det, delta, m.x_range);
    let (mut exact_lower, mut exact_upper) = (None, None);
    if let Some(s) = sample {
        exact_lower = exact_on_sample(m, s, delta, Direction::Lower);
        exact_upper = exact_on_sample(m, s, delta, Direction::Upper);
        if let Some(v) = exact_lower {
            (lo, cl) = (v.max(m.x_range.0), v < m.x_range.0);
        }
        if let Some(v) = exact_upper {
            (hi, cu) = (v.min(m.x_range.1), v > m.x_range.1);
        }
    }
    let range = m.x_range;
    Ok(VarBounds {
        delta,
        e_x,
        sqrt_lower: e_x - w,
        sqrt_upper: e_x + w,
        exact_lower,
        exact_upper,
        ex_lower: lo,
        ex_upper: hi,
        clipped_lower: cl,
        clipped_upper: cu,
        ratio_lower: spec.ratio(lo),
        ratio_upper: spec.ratio(hi),
        ratio_lower_se: m.jackknife_se(|e, d| spec.ratio(clipped_sqrt(e, d, delta, range).0)),
        ratio_upper_se: m.jackknife_se(|e, d| spec.ratio(clipped_sqrt(e, d, delta, range).1)),
    })
}

/// Square-root (and, with `exact`, sample-exact) bounds at `delta` from `n`
/// Monte Carlo draws.
pub fn var_bounds(spec: &PortfolioSpec, delta: f64, n: usize, rng: RngState, exact: bool) -> Result<VarBounds> {
    let s = simulate(spec, n, rng)?;
    let m = McMoments::from_sample(&s);
    bounds_from(spec, &m, exact.then_some(&s), delta)
}

/// [`var_bounds`] over a grid of radii sharing one sample.
pub fn var_bounds_grid(
    spec: &PortfolioSpec,
    deltas: &[f64],
    n: usize,
    rng: RngState,
    exact: bool,
) -> Result<(McMoments, Vec<VarBounds>)> {
    let s = simulate(spec, n, rng)?;
    let m = McMoments::from_sample(&s);
    let out = deltas
        .iter()
        .map(|&d| bounds_from(spec, &m, exact.then_some(&s), d))
        .collect::<Result<Vec<_>>>()?;
    Ok((m, out))
}

/// Dual of the χ² problem on the sample measure (`μ = P̂`, `L ≡ 1`):
/// `G(λ, b, c) = mean sup_{ℓ≥0}{ℓs - λ(ℓ-1)²} + λδ - b - cᵀȳ` with
/// `s = σX + b + cᵀY`.
fn sample_dual(s: &McSample, ybar: &[f64], sign: f64, delta: f64, x: &[f64]) -> Option<Eval> {
    let lam = x[0];
    if !(lam > 0.0) {
        return None;
    }
    let k = s.width - 1;
    let (b, c) = (x[1], &x[2..]);
    // value, φ, ℓ, ℓX, ℓ_s, φ'ℓ_s, φ'²ℓ_s, then ℓY, ℓ_sY, φ'ℓ_sY (k each),
    // then ℓ_sYYᵀ (k²)
    let dim = 7 + 3 * k + k * k;
    let n = s.len();
    let sums: Vec<Vec<f64>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|ci| {
            let mut acc = vec![0.0; dim];
            for i in ci * CHUNK..((ci + 1) * CHUNK).min(n) {
                let r = s.row(i);
                let (xv, y) = (r[0], &r[1..]);
                let sv = sign * xv + b + c.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
                let ell = (1.0 + sv / (2.0 * lam)).max(0.0);
                if ell <= 0.0 {
                    acc[0] -= lam;
                    acc[1] += 1.0;
                    continue;
                }
                let phi = (ell - 1.0) * (ell - 1.0);
                let ls = 0.5 / lam;
                let dp = 2.0 * (ell - 1.0);
                acc[0] += ell * sv - lam * phi;
                acc[1] += phi;
                acc[2] += ell;
                acc[3] += ell * xv;
                acc[4] += ls;
                acc[5] += dp * ls;
                acc[6] += dp * dp * ls;
                for j in 0..k {
                    acc[7 + j] += ell * y[j];
                    acc[7 + k + j] += ls * y[j];
                    acc[7 + 2 * k + j] += dp * ls * y[j];
                    for l in 0..k {
                        acc[7 + 3 * k + j * k + l] += ls * y[j] * y[l];
                    }
                }
            }
            acc
        })
        .collect();
    let mut m = vec![0.0; dim];
    for a in &sums {
        for (t, v) in m.iter_mut().zip(a) {
            *t += v;
        }
    }
    let nf = n as f64;
    m.iter_mut().for_each(|v| *v /= nf);
    if !m.iter().all(|v| v.is_finite()) {
        return None;
    }
    let value = m[0] + lam * delta - b - c.iter().zip(ybar).map(|(a, b)| a * b).sum::<f64>();
    let mut grad = DVector::zeros(k + 2);
    grad[0] = delta - m[1];
    grad[1] = m[2] - 1.0;
    for j in 0..k {
        grad[2 + j] = m[7 + j] - ybar[j];
    }
    let mut hess = DMatrix::zeros(k + 2, k + 2);
    hess[(0, 0)] = m[6];
    hess[(0, 1)] = -m[5];
    hess[(1, 1)] = m[4];
    for j in 0..k {
        hess[(0, 2 + j)] = -m[7 + 2 * k + j];
        hess[(1, 2 + j)] = m[7 + k + j];
        for l in 0..k {
            hess[(2 + j, 2 + l)] = m[7 + 3 * k + j * k + l];
        }
    }
    for i in 0..k + 2 {
        for j in 0..i {
            hess[(i, j)] = hess[(j, i)];
        }
    }
    Some(Eval {
        value,
        grad,
        hess,
        m: vec![m[3]],
    })
}

/// Exact bound on `E' X` over the χ² ball around the sample measure with
/// the `d - 1` moment constraints, or `None` if the dual solve fails.
fn exact_on_sample(m: &McMoments, s: &McSample, delta: f64, direction: Direction) -> Option<f64> {
    let ms = &m.summary;
    if ms.det_ratio <= 1e-14 || delta == 0.0 {
        return Some(ms.e_x);
    }
    let sign = direction.sign();
    let k = s.width - 1;
    let ybar: Vec<f64> = (0..k).map(|j| mean_col(s, j + 1)).collect();
    let beta = m.beta();
    let start = |d: f64| -> Vec<f64> {
        // the square-root optimiser 1 + εσ(X - m_X - βᵀ(Y - ȳ))
        let eps = (d / ms.det_ratio).sqrt();
        let mut x = vec![0.5 / eps, -sign * (ms.e_x - beta.iter().zip(&ybar).map(|(a, b)| a * b).sum::<f64>())];
        x.extend(beta.iter().map(|b| -sign * b));
        x
    };
    let solve = |d: f64, x0: &[f64]| newton_min(|x| sample_dual(s, &ybar, sign, d, x), x0, GTOL, MAX_NEWTON);
    if let Some((_, e)) = solve(delta, &start(delta)) {
        return Some(e.m[0]);
    }
    // far from the square-root regime: follow the solution up in δ
    let mut d = delta / 64.0;
    let (mut x, _) = solve(d, &start(d))?;
    let mut ratio: f64 = 1.5;
    loop {
        let next = (d * ratio).min(delta);
        let mut trial = x.clone();
        trial[0] *= (d / next).sqrt();
        match solve(next, &trial) {
            Some((xn, e)) => {
                if next >= delta {
                    return Some(e.m[0]);
                }
                x = xn;
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
}

fn mean_col(s: &McSample, j: usize) -> f64 {
    s.rows.chunks_exact(s.width).map(|r| r[j]).sum::<f64>() / s.len() as f64
}
