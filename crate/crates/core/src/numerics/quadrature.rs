//! Adaptive quadrature on `[0, 1]` against measures with atoms.
//!
//! Interior panels use a globally adaptive Gauss–Kronrod (7/15) scheme that
//! always bisects the panel with the largest error estimate. Spectral
//! densities may vanish super-polynomially or blow up integrably at the
//! endpoints, so the slivers `[0, 1e-8]` and `[1 - 1e-8, 1]` are handled
//! separately by tanh-sinh quadrature, which never evaluates the endpoint
//! and converges for algebraic endpoint singularities.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::measure::AtomicMeasure;
use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const ENDPOINT_SPLIT: f64 = 1e-8;
pub const MAX_SUBDIVISIONS: usize = 4000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Result of a vector-valued quadrature.
#[derive(Debug, Clone)]
pub struct QuadOutcome {
    pub value: Vec<f64>,
    /// Estimated absolute error (maximum over components).
    pub error: f64,
    pub subdivisions: usize,
    pub converged: bool,
}

impl QuadOutcome {
    fn into_result(self) -> Result<Vec<f64>> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::Quadrature {
                subdivisions: self.subdivisions,
                estimate: self.value.first().copied().unwrap_or(f64::NAN),
                error: self.error,
            })
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: Vec<f64>,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).abs();
            if d.is_nan() {
                f64::INFINITY
            } else {
                d
            }
        })
        .fold(0.0, f64::max)
}

fn gk15<F: Fn(f64, f64, &mut [f64])>(f: &F, dim: usize, a: f64, b: f64, buf: &mut [f64]) -> (Vec<f64>, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    f(c, 1.0 - c, buf);
    for i in 0..dim {
        k[i] += WGK[7] * buf[i];
        g[i] += WG[3] * buf[i];
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        for x in [c - dx, c + dx] {
            f(x, 1.0 - x, buf);
            for i in 0..dim {
                k[i] += WGK[j] * buf[i];
                if j % 2 == 1 {
                    g[i] += WG[j / 2] * buf[i];
                }
            }
        }
    }
    for i in 0..dim {
        k[i] *= h;
        g[i] *= h;
    }
    let err = max_abs_diff(&k, &g);
    (k, err)
}

/// Tanh-sinh quadrature of `f` over `[a, b]`, refined level by level until
/// two successive estimates agree within `tol`.
fn tanh_sinh<F: Fn(f64, f64, &mut [f64])>(f: &F, dim: usize, a: f64, b: f64, tol: f64, buf: &mut [f64]) -> (Vec<f64>, f64) {
    const T_MAX: f64 = 6.5;
    const MAX_LEVEL: u32 = 9;
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let hp = std::f64::consts::FRAC_PI_2;

    // Sum of w(t) f(x(t)) over nodes t = j * step with j odd (or all j at level 0).
    let level_sum = |step: f64, all: bool, buf: &mut [f64]| -> Vec<f64> {
        let mut s = vec![0.0; dim];
        let mut j: i64 = if all { 0 } else { 1 };
        loop {
            let t = j as f64 * step;
            if t > T_MAX {
                break;
            }
            let u = hp * t.sinh();
            let e = (-2.0 * u).exp();
            let w = hp * t.cosh() * 4.0 * e / ((1.0 + e) * (1.0 + e));
            let d = half * 2.0 * e / (1.0 + e);
            if w == 0.0 {
                break;
            }
            if d == 0.0 {
                break;
            }
            // Nodes as (x, 1 - x); the complement is carried exactly next to 1.
            let left = (a + d, if a == 0.0 { 1.0 - d } else { 1.0 - (a + d) });
            let right = (b - d, if b == 1.0 { d } else { 1.0 - (b - d) });
            let centre = [(mid, 1.0 - mid)];
            let pair = [left, right];
            let nodes: &[(f64, f64)] = if j == 0 { &centre } else { &pair };
            for &(x, xc) in nodes {
                if x >= a && x <= b && x > 0.0 && xc > 0.0 {
                    f(x, xc, buf);
                    for i in 0..dim {
                        let v = w * buf[i];
                        if v.is_finite() || !buf[i].is_finite() {
                            s[i] += v;
                        }
                    }
                }
            }
            j += if all { 1 } else { 2 };
        }
        s
    };

    let mut step = 1.0;
    let mut sum = level_sum(step, true, buf);
    let mut est: Vec<f64> = sum.iter().map(|s| s * step * half).collect();
    let mut err = f64::INFINITY;
    for level in 1..=MAX_LEVEL {
        step *= 0.5;
        let add = level_sum(step, false, buf);
        for i in 0..dim {
            sum[i] += add[i];
        }
        let next: Vec<f64> = sum.iter().map(|s| s * step * half).collect();
        err = max_abs_diff(&next, &est);
        est = next;
        if level >= 3 && err <= tol {
            break;
        }
    }
    (est, err)
}

/// Vector-valued quadrature of `f` with respect to Lebesgue measure over
/// `[lo, hi] ⊂ [0, 1]`, split at `breaks`. The absolute error target `tol`
/// applies to the largest component.
pub fn quad_vec<F: Fn(f64, f64, &mut [f64])>(
    f: F,
    dim: usize,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    tol: f64,
    max_subdivisions: usize,
) -> QuadOutcome {
    let mut buf = vec![0.0; dim];
    let mut total = vec![0.0; dim];
    if !(hi > lo) {
        return QuadOutcome {
            value: total,
            error: 0.0,
            subdivisions: 0,
            converged: true,
        };
    }
    let mut sliver_err = 0.0;
    let mut a0 = lo;
    let mut b0 = hi;
    if lo == 0.0 && hi > 2.0 * ENDPOINT_SPLIT {
        let (v, e) = tanh_sinh(&f, dim, 0.0, ENDPOINT_SPLIT, 0.05 * tol, &mut buf);
        for i in 0..dim {
            total[i] += v[i];
        }
        sliver_err += e;
        a0 = ENDPOINT_SPLIT;
    }
    if hi == 1.0 && b0 - a0 > 2.0 * ENDPOINT_SPLIT {
        let (v, e) = tanh_sinh(&f, dim, 1.0 - ENDPOINT_SPLIT, 1.0, 0.05 * tol, &mut buf);
        for i in 0..dim {
            total[i] += v[i];
        }
        sliver_err += e;
        b0 = 1.0 - ENDPOINT_SPLIT;
    }

    let mut cuts = vec![a0];
    cuts.extend(breaks.iter().copied().filter(|&x| x > a0 && x < b0));
    cuts.push(b0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut heap = BinaryHeap::new();
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            let (value, err) = gk15(&f, dim, w[0], w[1], &mut buf);
            heap.push(Panel {
                a: w[0],
                b: w[1],
                value,
                err,
            });
        }
    }
    let mut finished: Vec<Panel> = Vec::new();
    let mut subdivisions = heap.len();
    let budget = (tol - sliver_err).max(0.5 * tol);
    loop {
        let err_sum: f64 = heap.iter().chain(finished.iter()).map(|p| p.err).sum();
        if err_sum <= budget {
            break;
        }
        if subdivisions >= max_subdivisions {
            break;
        }
        let Some(p) = heap.pop() else { break };
        let m = 0.5 * (p.a + p.b);
        if !(m > p.a && m < p.b) || (p.b - p.a) < 1e-15 * m.abs().max(1e-300) {
            finished.push(p);
            continue;
        }
        let (v1, e1) = gk15(&f, dim, p.a, m, &mut buf);
        let (v2, e2) = gk15(&f, dim, m, p.b, &mut buf);
        heap.push(Panel { a: p.a, b: m, value: v1, err: e1 });
        heap.push(Panel { a: m, b: p.b, value: v2, err: e2 });
        subdivisions += 1;
    }
    let mut err = sliver_err;
    for p in heap.iter().chain(finished.iter()) {
        for i in 0..dim {
            total[i] += p.value[i];
        }
        err += p.err;
    }
    let converged = err <= tol && total.iter().all(|v| v.is_finite());
    QuadOutcome {
        value: total,
        error: err,
        subdivisions,
        converged,
    }
}

/// Vector-valued integral of `f` against the measure `m` (density part plus
/// atoms), without turning non-convergence into an error.
pub fn integrate_outcome<F: Fn(f64, f64, &mut [f64])>(
    f: F,
    dim: usize,
    m: &AtomicMeasure,
    breaks: &[f64],
    tol: f64,
) -> QuadOutcome {
    let mut out = match m.density() {
        Some(dens) => {
            let mut all_breaks: Vec<f64> = m.breaks().to_vec();
            all_breaks.extend_from_slice(breaks);
            quad_vec(
                |w, wc, buf: &mut [f64]| {
                    let d = dens(w, wc);
                    if d == 0.0 {
                        buf.iter_mut().for_each(|v| *v = 0.0);
                    } else {
                        f(w, wc, buf);
                        buf.iter_mut().for_each(|v| *v *= d);
                    }
                },
                dim,
                0.0,
                1.0,
                &all_breaks,
                tol,
                MAX_SUBDIVISIONS,
            )
        }
        None => QuadOutcome {
            value: vec![0.0; dim],
            error: 0.0,
            subdivisions: 0,
            converged: true,
        },
    };
    let mut buf = vec![0.0; dim];
    for atom in m.atoms() {
        if atom.mass > 0.0 {
            f(atom.loc, 1.0 - atom.loc, &mut buf);
            for i in 0..dim {
                out.value[i] += atom.mass * buf[i];
            }
        }
    }
    if out.value.iter().any(|v| !v.is_finite()) {
        out.converged = false;
    }
    out
}

/// `∫ f dm` for a vector-valued integrand; errors when the adaptive
/// refinement fails to reach `tol`.
pub fn integrate_vec<F: Fn(f64, &mut [f64])>(
    f: F,
    dim: usize,
    m: &AtomicMeasure,
    breaks: &[f64],
    tol: f64,
) -> Result<Vec<f64>> {
    integrate_outcome(|w, _, out: &mut [f64]| f(w, out), dim, m, breaks, tol).into_result()
}

/// As [`integrate_vec`], with the integrand receiving `(ω, 1 - ω)`; the
/// complement is exact even where `ω` rounds to 1.
pub fn integrate_pair_vec<F: Fn(f64, f64, &mut [f64])>(
    f: F,
    dim: usize,
    m: &AtomicMeasure,
    breaks: &[f64],
    tol: f64,
) -> Result<Vec<f64>> {
    integrate_outcome(f, dim, m, breaks, tol).into_result()
}

/// `∫ f dm = ∫₀¹ f(ω) density(ω) dω + Σ f(loc)·mass`.
pub fn integrate(f: impl Fn(f64) -> f64, m: &AtomicMeasure, tol: f64) -> Result<f64> {
    integrate_with_breaks(f, m, &[], tol)
}

/// As [`integrate`], additionally splitting at `breaks` (kinks of `f`).
pub fn integrate_with_breaks(
    f: impl Fn(f64) -> f64,
    m: &AtomicMeasure,
    breaks: &[f64],
    tol: f64,
) -> Result<f64> {
    integrate_vec(|w, out: &mut [f64]| out[0] = f(w), 1, m, breaks, tol).map(|v| v[0])
}

/// Plain Lebesgue integral over `[lo, hi]`.
pub fn integrate_interval(f: impl Fn(f64) -> f64, lo: f64, hi: f64, breaks: &[f64], tol: f64) -> Result<f64> {
    quad_vec(
        |w, _, out: &mut [f64]| out[0] = f(w),
        1,
        lo,
        hi,
        breaks,
        tol,
        MAX_SUBDIVISIONS,
    )
    .into_result()
    .map(|v| v[0])
}
