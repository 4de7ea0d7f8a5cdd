//! Normal and Student-t distribution functions.

use statrs::function::beta::beta_reg;
use libm::erfc;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Student-t distribution function with `nu > 0` degrees of freedom.
pub fn student_t_cdf(x: f64, nu: f64) -> f64 {
    if x.is_infinite() {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    if x == 0.0 {
        return 0.5;
    }
    let t = nu / (nu + x * x);
    let tail = 0.5 * beta_reg(0.5 * nu, 0.5, t);
    if x > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Upper tail `1 - F_nu(x)`, accurate for large positive `x`.
pub fn student_t_sf(x: f64, nu: f64) -> f64 {
    student_t_cdf(-x, nu)
}
