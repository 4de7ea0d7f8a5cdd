//! Brute-force oracle for robust expectation bounds: the spectral law is
//! discretised on 401 cells (plus atoms) and the resulting finite convex
//! program is solved by a log-barrier Newton method.
//!
//! Nothing here calls the library's quadrature, root finding or bounds code.

use super::gauss_legendre;

pub const CELLS: usize = 401;

#[derive(Clone, Copy, Debug)]
pub enum Mu {
    P,
    Lebesgue,
}

#[derive(Clone, Copy, Debug)]
pub enum Ball {
    /// Σ w (v - l)² ≤ δ
    ChiSquare,
    /// log(Σ w v^η)/(η-1) ≤ δ, reference measure μ = P
    Renyi(f64),
    /// Σ w v log v ≤ δ, reference measure μ = P
    Kl,
}

/// Discrete problem: node weights `w` (μ-mass), reference likelihood ratio
/// `l`, objective values `x` and constraint values `y`.
#[derive(Clone, Debug)]
pub struct Grid {
    pub w: Vec<f64>,
    pub l: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

fn x_of(z: f64, w: f64) -> f64 {
    2.0 * ((1.0 - z) * w).max(z * (1.0 - w))
}

/// ∫ f over [lo, hi], split at `kink` and graded towards 0 and 1.
fn cell_integral(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, kink: f64) -> f64 {
    let (gx, gw) = gauss_legendre(20);
    let mut cuts = vec![lo, hi];
    if kink > lo && kink < hi {
        cuts.push(kink);
    }
    let mut t = hi;
    if lo == 0.0 {
        while t > 1e-15 {
            t *= 0.25;
            cuts.push(t);
        }
    }
    let mut t = 1.0 - lo;
    if hi == 1.0 {
        while t > 1e-15 {
            t *= 0.25;
            cuts.push(1.0 - t);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut s = 0.0;
    for c in cuts.windows(2) {
        let (a, b) = (c[0], c[1]);
        let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
        for (xi, wi) in gx.iter().zip(&gw) {
            let v = f(m + h * xi);
            if v.is_finite() {
                s += h * wi * v;
            }
        }
    }
    s
}

impl Grid {
    /// Discretises the law with density `dens` and `atoms` (location, mass)
    /// under dominating measure `mu`, for the Pickands objective at `z`.
    pub fn pickands(dens: &dyn Fn(f64) -> f64, atoms: &[(f64, f64)], mu: Mu, z: f64) -> Grid {
        Self::pickands_cells(dens, atoms, mu, z, CELLS)
    }

    pub fn pickands_cells(dens: &dyn Fn(f64) -> f64, atoms: &[(f64, f64)], mu: Mu, z: f64, cells: usize) -> Grid {
        let h = 1.0 / cells as f64;
        let mut g = Grid {
            w: vec![],
            l: vec![],
            x: vec![],
            y: vec![],
        };
        for i in 0..cells {
            let (lo, hi) = (i as f64 * h, if i + 1 == cells { 1.0 } else { (i + 1) as f64 * h });
            let p = cell_integral(dens, lo, hi, z);
            match mu {
                Mu::P => {
                    if p <= 0.0 {
                        continue;
                    }
                    let py = cell_integral(&|w| w * dens(w), lo, hi, z);
                    let px = cell_integral(&|w| x_of(z, w) * dens(w), lo, hi, z);
                    g.w.push(p);
                    g.l.push(1.0);
                    g.y.push(py / p);
                    g.x.push(px / p);
                }
                Mu::Lebesgue => {
                    let len = hi - lo;
                    let px = cell_integral(&|w| x_of(z, w), lo, hi, z);
                    g.w.push(len);
                    g.l.push(p / len);
                    g.y.push(0.5 * (lo + hi));
                    g.x.push(px / len);
                }
            }
        }
        if let Mu::P = mu {
            for &(loc, mass) in atoms {
                if mass > 0.0 {
                    g.w.push(mass);
                    g.l.push(1.0);
                    g.y.push(loc);
                    g.x.push(x_of(z, loc));
                }
            }
        }
        g
    }

    pub fn mean_x(&self) -> f64 {
        (0..self.w.len()).map(|i| self.w[i] * self.l[i] * self.x[i]).sum()
    }

    fn mean_y(&self) -> f64 {
        (0..self.w.len()).map(|i| self.w[i] * self.l[i] * self.y[i]).sum()
    }
}

struct Parts {
    /// constraint function value C(v)
    c: f64,
    /// per-node derivative and second derivative of C
    d1: Vec<f64>,
    d2: Vec<f64>,
}

fn ball_parts(g: &Grid, ball: Ball, v: &[f64]) -> Parts {
    let n = v.len();
    let mut p = Parts {
        c: 0.0,
        d1: vec![0.0; n],
        d2: vec![0.0; n],
    };
    match ball {
        Ball::ChiSquare => {
            for i in 0..n {
                let d = v[i] - g.l[i];
                p.c += g.w[i] * d * d;
                p.d1[i] = 2.0 * g.w[i] * d;
                p.d2[i] = 2.0 * g.w[i];
            }
        }
        Ball::Renyi(eta) => {
            for i in 0..n {
                p.c += g.w[i] * v[i].powf(eta);
                p.d1[i] = g.w[i] * eta * v[i].powf(eta - 1.0);
                p.d2[i] = g.w[i] * eta * (eta - 1.0) * v[i].powf(eta - 2.0);
            }
        }
        Ball::Kl => {
            for i in 0..n {
                p.c += g.w[i] * v[i] * v[i].ln();
                p.d1[i] = g.w[i] * (v[i].ln() + 1.0);
                p.d2[i] = g.w[i] / v[i];
            }
        }
    }
    p
}

fn radius(ball: Ball, delta: f64) -> f64 {
    match ball {
        Ball::ChiSquare | Ball::Kl => delta,
        Ball::Renyi(eta) => ((eta - 1.0) * delta).exp(),
    }
}

/// Optimal value of max (or min) Σ w v x subject to v ≥ 0, Σ w v = 1,
/// Σ w v y = Σ w l y and the divergence ball.
pub fn solve(g: &Grid, ball: Ball, delta: f64, upper: bool) -> f64 {
    let n = g.w.len();
    let sign = if upper { 1.0 } else { -1.0 };
    let r = radius(ball, delta);
    let m = g.mean_y();

    // Strictly feasible start: blend the reference with an affine
    // likelihood ratio that is positive everywhere.
    let (s0, s1, s2) = (0..n).fold((0.0, 0.0, 0.0), |acc, i| {
        (acc.0 + g.w[i], acc.1 + g.w[i] * g.y[i], acc.2 + g.w[i] * g.y[i] * g.y[i])
    });
    let det = s0 * s2 - s1 * s1;
    let alpha = (s2 - s1 * m) / det;
    let beta = (s0 * m - s1) / det;
    let vu: Vec<f64> = g.y.iter().map(|y| alpha + beta * y).collect();
    assert!(vu.iter().all(|v| *v > 0.0), "affine start not positive");
    let mut eps = 0.5;
    let mut v: Vec<f64>;
    loop {
        v = (0..n).map(|i| (1.0 - eps) * g.l[i] + eps * vu[i]).collect();
        if ball_parts(g, ball, &v).c < r {
            break;
        }
        eps *= 0.5;
        assert!(eps > 1e-12, "no strictly feasible start");
    }

    let obj = |v: &[f64]| -> f64 { (0..n).map(|i| g.w[i] * v[i] * g.x[i]).sum::<f64>() };
    // barrier weighted by the node masses, so that its curvature scales
    // like the divergence term
    let phi = |v: &[f64], t: f64| -> f64 {
        if v.iter().any(|x| *x <= 0.0) {
            return f64::INFINITY;
        }
        let s = r - ball_parts(g, ball, v).c;
        if s <= 0.0 {
            return f64::INFINITY;
        }
        -t * sign * obj(v) - (0..n).map(|i| g.w[i] * v[i].ln()).sum::<f64>() - s.ln()
    };
    let a0: Vec<f64> = g.w.clone();
    let a1: Vec<f64> = (0..n).map(|i| g.w[i] * g.y[i]).collect();
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };

    let mut t = 1.0;
    let n_ineq = g.w.iter().sum::<f64>() + 1.0;
    while n_ineq / t > 1e-12 {
        for _ in 0..200 {
            let p = ball_parts(g, ball, &v);
            let s = r - p.c;
            // gradient and Hessian = diag(dg) + u uᵀ
            let grad: Vec<f64> = (0..n)
                .map(|i| -t * sign * g.w[i] * g.x[i] - g.w[i] / v[i] + p.d1[i] / s)
                .collect();
            let dg: Vec<f64> = (0..n).map(|i| g.w[i] / (v[i] * v[i]) + p.d2[i] / s).collect();
            let u: Vec<f64> = (0..n).map(|i| p.d1[i] / s).collect();
            // H⁻¹ b via Sherman–Morrison
            let hinv = |b: &[f64]| -> Vec<f64> {
                let db: Vec<f64> = (0..n).map(|i| b[i] / dg[i]).collect();
                let du: Vec<f64> = (0..n).map(|i| u[i] / dg[i]).collect();
                let num: f64 = (0..n).map(|i| u[i] * db[i]).sum();
                let den: f64 = 1.0 + (0..n).map(|i| u[i] * du[i]).sum::<f64>();
                (0..n).map(|i| db[i] - du[i] * num / den).collect()
            };
            // Newton step for the equality-constrained problem, also
            // correcting any drift in A v = (1, m)
            let res = (1.0 - dot(&a0, &v), m - dot(&a1, &v));
            let hg = hinv(&grad);
            let ha0 = hinv(&a0);
            let ha1 = hinv(&a1);
            let (m00, m01, m11) = (dot(&a0, &ha0), dot(&a0, &ha1), dot(&a1, &ha1));
            let (r0, r1) = (-dot(&a0, &hg) - res.0, -dot(&a1, &hg) - res.1);
            let dm = m00 * m11 - m01 * m01;
            let nu0 = (r0 * m11 - r1 * m01) / dm;
            let nu1 = (m00 * r1 - m01 * r0) / dm;
            let dv: Vec<f64> = (0..n).map(|i| -(hg[i] + nu0 * ha0[i] + nu1 * ha1[i])).collect();
            let dec = -dot(&grad, &dv);
            if dec.abs() / 2.0 < 1e-12 && res.0.abs() + res.1.abs() < 1e-14 {
                break;
            }
            let f0 = phi(&v, t);
            let mut step = 1.0;
            let mut moved = false;
            while step > 1e-14 {
                let trial: Vec<f64> = (0..n).map(|i| v[i] + step * dv[i]).collect();
                let f1 = phi(&trial, t);
                // merit only meaningful once feasible; otherwise accept any finite point
                if f1.is_finite() && (res.0.abs() + res.1.abs() > 1e-12 || f1 <= f0 - 0.25 * step * dec.max(0.0) + 1e-15 * f0.abs()) {
                    v = trial;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        t *= 8.0;
    }
    obj(&v)
}

/// Minimum of `Σ w (v - l)²` over `v ≥ 0` vanishing below `z`, with the
/// two moment constraints, by an active-set iteration on the positive part.
pub fn restricted_projection(g: &Grid, z: f64) -> f64 {
    let n = g.w.len();
    let m: f64 = (0..n).map(|i| g.w[i] * g.l[i] * g.y[i]).sum();
    let mut active: Vec<bool> = (0..n).map(|i| g.y[i] >= z).collect();
    let support = active.clone();
    for _ in 0..n {
        // v = l + b + c y on the active set, 0 elsewhere
        let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in (0..n).filter(|&i| active[i]) {
            s0 += g.w[i];
            s1 += g.w[i] * g.y[i];
            s2 += g.w[i] * g.y[i] * g.y[i];
            t0 += g.w[i] * g.l[i];
            t1 += g.w[i] * g.l[i] * g.y[i];
        }
        let (r0, r1) = (1.0 - t0, m - t1);
        let det = s0 * s2 - s1 * s1;
        let b = (r0 * s2 - r1 * s1) / det;
        let c = (s0 * r1 - s1 * r0) / det;
        let v = |i: usize| g.l[i] + b + c * g.y[i];
        let drop: Vec<usize> = (0..n).filter(|&i| active[i] && v(i) < 0.0).collect();
        if drop.is_empty() {
            // KKT: inactive support nodes must not want positive mass
            for i in (0..n).filter(|&i| support[i] && !active[i]) {
                assert!(v(i) <= 1e-12, "active set not optimal at node {i}");
            }
            return (0..n)
                .map(|i| {
                    let vi = if active[i] { v(i) } else { 0.0 };
                    g.w[i] * (vi - g.l[i]).powi(2)
                })
                .sum();
        }
        for i in drop {
            active[i] = false;
        }
    }
    panic!("active set did not settle");
}
