use rand::Rng;
use rayon::prelude::*;

use crate::numerics::RngState;
use crate::spectral::{Family, SpectralModel};
use crate::{Error, Result};

use super::{fit_mle, fit_mle_from, AngularSample};

/// Pointwise bootstrap band for Pickands' function.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub z: Vec<f64>,
    /// Pickands' function of the fit to the full sample.
    pub centre: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Parameters of each successful refit, by resample index.
    pub params: Vec<Vec<f64>>,
    /// Resamples whose refit failed.
    pub failures: usize,
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let i = h.floor() as usize;
    let f = h - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + f * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// Nonparametric bootstrap of the fitted Pickands curve.
///
/// Resample 0 is the sample itself; resamples `1..B` draw `k` angles with
/// replacement on stream `b` of `rng` and refit starting from the full-sample
/// estimate. The band is the pointwise 2.5% / 97.5% quantile, widened where
/// needed so that it contains the full-sample curve.
pub fn bootstrap_pickands(
    sample: &AngularSample,
    family: Family,
    b: usize,
    z: &[f64],
    rng: RngState,
) -> Result<Envelope> {
    if b == 0 {
        return Err(Error::InvalidInput("bootstrap needs at least one resample".into()));
    }
    let fit = fit_mle(family, sample)?;
    let centre = z
        .iter()
        .map(|&zz| fit.model.pickands(zz))
        .collect::<Result<Vec<_>>>()?;
    let k = sample.len();
    let runs: Vec<Option<(Vec<f64>, Vec<f64>)>> = (0..b)
        .into_par_iter()
        .map(|i| {
            if i == 0 {
                return Some((fit.model.params(), centre.clone()));
            }
            let mut r = rng.substream(i as u64).rng();
            let angles: Vec<f64> = (0..k).map(|_| sample.angles[r.random_range(0..k)]).collect();
            let re = sample.with_angles(angles);
            let refit = fit_mle_from(family, &re, &fit.model).ok()?;
            let curve: Option<Vec<f64>> = z.iter().map(|&zz| refit.model.pickands(zz).ok()).collect();
            Some((refit.model.params(), curve?))
        })
        .collect();
    let failures = runs.iter().filter(|r| r.is_none()).count();
    let ok: Vec<(Vec<f64>, Vec<f64>)> = runs.into_iter().flatten().collect();
    let mut lower = Vec::with_capacity(z.len());
    let mut upper = Vec::with_capacity(z.len());
    for (j, c) in centre.iter().enumerate() {
        let mut col: Vec<f64> = ok.iter().map(|r| r.1[j]).collect();
        col.sort_by(f64::total_cmp);
        lower.push(quantile(&col, 0.025).min(*c));
        upper.push(quantile(&col, 0.975).max(*c));
    }
    Ok(Envelope {
        z: z.to_vec(),
        centre,
        lower,
        upper,
        params: ok.into_iter().map(|r| r.0).collect(),
        failures,
    })
}

/// Convenience: Pickands curve of a model on a grid.
pub fn pickands_curve(model: &SpectralModel, z: &[f64]) -> Result<Vec<f64>> {
    z.iter().map(|&zz| model.pickands(zz)).collect()
}
