//! Test oracles that do not call into the library's numerics.
#![allow(dead_code)]

pub mod grid;

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

/// Closed-form Pickands function of the Hüsler–Reiss family.
pub fn pickands_hr(lambda: f64, z: f64) -> f64 {
    if z <= 0.0 || z >= 1.0 {
        return 1.0;
    }
    let n = Normal::new(0.0, 1.0).unwrap();
    let l = ((1.0 - z) / z).ln() / (2.0 * lambda);
    (1.0 - z) * n.cdf(lambda + l) + z * n.cdf(lambda - l)
}

/// Closed-form Pickands function of the asymmetric logistic family.
pub fn pickands_al(a: f64, b1: f64, b2: f64, z: f64) -> f64 {
    (1.0 - b1) * (1.0 - z)
        + (1.0 - b2) * z
        + ((b1 * (1.0 - z)).powf(1.0 / a) + (b2 * z).powf(1.0 / a)).powf(a)
}

/// Closed-form Pickands function of the extremal-t family.
pub fn pickands_et(rho: f64, a: f64, z: f64) -> f64 {
    if z <= 0.0 || z >= 1.0 {
        return 1.0;
    }
    let t = StudentsT::new(0.0, 1.0, a + 1.0).unwrap();
    let c = ((a + 1.0) / (1.0 - rho * rho)).sqrt();
    (1.0 - z) * t.cdf(c * (((1.0 - z) / z).powf(1.0 / a) - rho))
        + z * t.cdf(c * ((z / (1.0 - z)).powf(1.0 / a) - rho))
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton on the Legendre
/// recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut r = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, r);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * r * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (r * p1 - p0) / (r * r - 1.0);
            let step = p1 / dp;
            r -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -r;
        x[n - 1 - i] = r;
        w[i] = 2.0 / ((1.0 - r * r) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss–Legendre rule of `n` points on each of `pieces` equal
/// parts of [a, b].
pub fn composite_gl(f: impl Fn(f64) -> f64, a: f64, b: f64, pieces: usize, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let h = (b - a) / pieces as f64;
    let mut s = 0.0;
    for p in 0..pieces {
        let lo = a + p as f64 * h;
        let c = lo + 0.5 * h;
        for (xi, wi) in x.iter().zip(&w) {
            s += 0.5 * h * wi * f(c + 0.5 * h * xi);
        }
    }
    s
}

/// Integral of `f(ω, 1-ω)` over (0, 1) on a mesh geometrically refined
/// towards both endpoints (down to 1e-300), for densities with endpoint
/// singularities. The right half is folded onto (0, 1/2] so both ends are
/// resolved equally well.
pub fn graded_integral(f: impl Fn(f64, f64) -> f64) -> f64 {
    let mut cuts = vec![0.5];
    let mut t = 0.5;
    while t > 1e-300 {
        t *= 0.125;
        cuts.push(t);
    }
    cuts.push(0.0);
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2)
        .map(|c| composite_gl(|t| f(t, 1.0 - t) + f(1.0 - t, t), c[0], c[1], 1, 30))
        .sum()
}

/// Hüsler–Reiss spectral density, straight from its closed form.
pub fn dens_hr(lambda: f64, w: f64) -> f64 {
    dens_hr_pair(lambda, w, 1.0 - w)
}

/// As [`dens_hr`], with the complement `wc = 1 - w` supplied exactly.
pub fn dens_hr_pair(lambda: f64, w: f64, wc: f64) -> f64 {
    if !(w > 0.0 && wc > 0.0) {
        return 0.0;
    }
    let arg = lambda + (wc / w).ln() / (2.0 * lambda);
    let log_norm = (2.0 * std::f64::consts::PI).sqrt().ln() + (4.0 * lambda).ln() + 2.0 * w.ln() + wc.ln();
    (-0.5 * arg * arg - log_norm).exp()
}

/// Asymmetric logistic spectral density on (0, 1).
pub fn dens_al(a: f64, b1: f64, b2: f64, w: f64) -> f64 {
    dens_al_pair(a, b1, b2, w, 1.0 - w)
}

/// As [`dens_al`] with the complement supplied exactly, evaluated in logs.
pub fn dens_al_pair(a: f64, b1: f64, b2: f64, w: f64, wc: f64) -> f64 {
    if !(w > 0.0 && wc > 0.0) || b1 == 0.0 || b2 == 0.0 {
        return 0.0;
    }
    let (t1, t2) = ((b1.ln() - w.ln()) / a, (b2.ln() - wc.ln()) / a);
    let m = t1.max(t2);
    let log_s = m + ((t1 - m).exp() + (t2 - m).exp()).ln();
    let log_d = ((1.0 - a) / (2.0 * a)).ln() + (b1 * b2).ln() / a - (1.0 + 1.0 / a) * (w.ln() + wc.ln())
        + (a - 2.0) * log_s;
    log_d.exp()
}

/// Extremal-t spectral density on (0, 1).
pub fn dens_et(rho: f64, a: f64, w: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    if !(w > 0.0 && w < 1.0) {
        return 0.0;
    }
    let c = ((a + 1.0) / 2.0 * (1.0 - rho * rho).ln() + ln_gamma((a + 2.0) / 2.0) - ln_gamma((a + 1.0) / 2.0)).exp()
        / (2.0 * a * std::f64::consts::PI.sqrt());
    let u = w * (1.0 - w);
    let q = w.powf(2.0 / a) - 2.0 * rho * u.powf(1.0 / a) + (1.0 - w).powf(2.0 / a);
    c * u.powf(1.0 / a - 1.0) * q.powf(-(a + 2.0) / 2.0)
}

/// Extremal-t endpoint atom (each end), normalised so the law has mass 1.
pub fn atom_et(rho: f64, a: f64) -> f64 {
    let t = StudentsT::new(0.0, 1.0, a + 1.0).unwrap();
    0.5 * (1.0 - t.cdf(rho * ((a + 1.0) / (1.0 - rho * rho)).sqrt()))
}
