//! Scalar and multidimensional root finding.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

pub const DEFAULT_ROOT_TOL: f64 = 1e-8;

fn sup_norm(v: &[f64]) -> f64 {
    v.iter()
        .map(|x| if x.is_finite() { x.abs() } else { f64::INFINITY })
        .fold(0.0, f64::max)
}

fn sq_norm(v: &[f64]) -> f64 {
    let s: f64 = v.iter().map(|x| x * x).sum();
    if s.is_finite() {
        s
    } else {
        f64::INFINITY
    }
}

fn jacobian(f: &impl Fn(&[f64]) -> Vec<f64>, x: &[f64], k: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(k, k);
    let mut xp = x.to_vec();
    for c in 0..k {
        let h = 1e-6 * x[c].abs().max(1.0);
        xp[c] = x[c] + h;
        let fp = f(&xp);
        xp[c] = x[c] - h;
        let fm = f(&xp);
        xp[c] = x[c];
        for r in 0..k {
            j[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    j
}

fn lm_step(j: &DMatrix<f64>, fx: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let jt = j.transpose();
    let mut a = &jt * j;
    let scale = a.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-12);
    for i in 0..a.nrows() {
        a[(i, i)] += lambda * scale;
    }
    let rhs = -(&jt * fx);
    a.lu().solve(&rhs).filter(|d| d.iter().all(|v| v.is_finite()))
}

/// Damped Newton iteration with a central-difference Jacobian.
///
/// Each step is accepted by backtracking on `‖F‖²`; a singular or useless
/// Newton direction falls back to Levenberg–Marquardt steps. Returns `x`
/// with `‖F(x)‖∞ ≤ tol`.
pub fn solve_system(
    f: impl Fn(&[f64]) -> Vec<f64>,
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let k = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut norm2 = sq_norm(&fx);
    if !norm2.is_finite() {
        return Err(Error::NoRoot {
            iterations: 0,
            residual: f64::INFINITY,
        });
    }
    let mut polish = 0;
    for it in 0..max_iter {
        if sup_norm(&fx) <= tol {
            // A few extra steps while they still help; stops at an exact zero.
            if norm2 == 0.0 || polish >= 3 {
                return Ok(x);
            }
            polish += 1;
        }
        let j = jacobian(&f, &x, k);
        let fv = DVector::from_vec(fx.clone());
        let newton = j.clone().lu().solve(&(-&fv)).filter(|d| d.iter().all(|v| v.is_finite()));

        let mut accepted = false;
        if let Some(dx) = &newton {
            let mut t = 1.0;
            for _ in 0..40 {
                let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + t * d).collect();
                let ft = f(&trial);
                let n2 = sq_norm(&ft);
                if n2 <= (1.0 - 1e-4 * t) * norm2 || (n2 < norm2 && t < 1e-3) {
                    x = trial;
                    fx = ft;
                    norm2 = n2;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
        }
        if !accepted {
            let mut lambda = 1e-6;
            while lambda < 1e12 {
                if let Some(dx) = lm_step(&j, &fv, lambda) {
                    let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a + d).collect();
                    let ft = f(&trial);
                    let n2 = sq_norm(&ft);
                    if n2 < norm2 {
                        x = trial;
                        fx = ft;
                        norm2 = n2;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 10.0;
            }
        }
        if !accepted {
            return if sup_norm(&fx) <= tol {
                Ok(x)
            } else {
                Err(Error::NoRoot {
                    iterations: it + 1,
                    residual: sup_norm(&fx),
                })
            };
        }
    }
    if sup_norm(&fx) <= tol {
        Ok(x)
    } else {
        Err(Error::NoRoot {
            iterations: max_iter,
            residual: sup_norm(&fx),
        })
    }
}

/// Runs [`solve_system`] from each start in turn and returns the first root.
pub fn solve_system_multistart(
    f: impl Fn(&[f64]) -> Vec<f64>,
    starts: &[Vec<f64>],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let mut last = Error::NoRoot {
        iterations: 0,
        residual: f64::INFINITY,
    };
    for s in starts {
        match solve_system(&f, s, tol, max_iter) {
            Ok(x) => return Ok(x),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Brent's method on a bracketing interval `[a, b]`.
pub fn brent(f: impl Fn(f64) -> f64, a: f64, b: f64, xtol: f64, max_iter: usize) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa * fb < 0.0) {
        return Err(Error::NoRoot {
            iterations: 0,
            residual: fa.abs().min(fb.abs()),
        });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        if fb.is_nan() {
            return Err(Error::NoRoot {
                iterations: 0,
                residual: f64::NAN,
            });
        }
    }
    Err(Error::NoRoot {
        iterations: max_iter,
        residual: fb.abs(),
    })
}

/// Plain bisection for a sign change between `lo` and `hi` (either order);
/// tolerates NaN-free but discontinuous `f` (returns the boundary point of
/// the sign change).
pub fn bisect(f: impl Fn(f64) -> f64, lo: f64, hi: f64, xtol: f64, max_iter: usize) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !(flo * fhi < 0.0) {
        return Err(Error::NoRoot {
            iterations: 0,
            residual: flo.abs().min(fhi.abs()),
        });
    }
    let neg_lo = flo < 0.0;
    for _ in 0..max_iter {
        if (hi - lo).abs() <= xtol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == neg_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
