use std::io::{Read, Write};

use rand::Rng;
use rayon::prelude::*;

use super::SpectralModel;
use crate::numerics::quadrature::{quad_vec, MAX_SUBDIVISIONS};
use crate::numerics::{sample_positive_stable, Atom, RngState};
use crate::{Error, Result};

const CDF_CELLS: usize = 2048;
const INVERSION_TOL: f64 = 1e-10;

/// Inverse-CDF sampler for a spectral model.
///
/// The continuous part is tabulated once on Chebyshev-clustered cells, so
/// each draw needs only a local inversion inside one cell.
#[derive(Debug, Clone)]
pub struct AngleSampler {
    model: SpectralModel,
    atoms: Vec<Atom>,
    /// Total continuous mass.
    cont_mass: f64,
    nodes: Vec<f64>,
    /// Continuous-part mass to the left of each node.
    cdf: Vec<f64>,
}

fn cell_mass(model: &SpectralModel, lo: f64, hi: f64, tol: f64) -> f64 {
    quad_vec(
        |w, wc, out: &mut [f64]| out[0] = model.density_pair(w, wc),
        1,
        lo,
        hi,
        &[],
        tol,
        MAX_SUBDIVISIONS,
    )
    .value[0]
}

impl AngleSampler {
    pub fn new(model: &SpectralModel) -> Result<Self> {
        let atoms: Vec<Atom> = model.atoms().into_iter().filter(|a| a.mass > 0.0).collect();
        let nodes: Vec<f64> = (0..=CDF_CELLS)
            .map(|i| 0.5 * (1.0 - (std::f64::consts::PI * i as f64 / CDF_CELLS as f64).cos()))
            .collect();
        let mut cdf = vec![0.0; nodes.len()];
        if model.has_density() {
            let masses: Vec<f64> = nodes
                .par_windows(2)
                .map(|w| cell_mass(model, w[0], w[1], 1e-13))
                .collect();
            for (i, m) in masses.iter().enumerate() {
                if !m.is_finite() {
                    return Err(Error::Quadrature {
                        subdivisions: MAX_SUBDIVISIONS,
                        estimate: *m,
                        error: f64::INFINITY,
                    });
                }
                cdf[i + 1] = cdf[i] + m;
            }
        }
        let cont_mass = *cdf.last().unwrap();
        Ok(Self {
            model: model.clone(),
            atoms,
            cont_mass,
            nodes,
            cdf,
        })
    }

    pub fn continuous_mass(&self) -> f64 {
        self.cont_mass
    }

    /// Continuous-part distribution function (unnormalised).
    pub fn continuous_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return self.cont_mass;
        }
        let i = self.nodes.partition_point(|&n| n <= x).saturating_sub(1).min(CDF_CELLS - 1);
        self.cdf[i] + cell_mass(&self.model, self.nodes[i], x, 1e-13)
    }

    /// Point of the continuous part at which the unnormalised CDF equals `u`.
    fn invert(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c <= u).saturating_sub(1).min(CDF_CELLS - 1);
        let (mut lo, mut hi) = (self.nodes[i], self.nodes[i + 1]);
        let target = u - self.cdf[i];
        let base = self.nodes[i];
        let mut x = lo + (hi - lo) * (target / (self.cdf[i + 1] - self.cdf[i])).clamp(0.0, 1.0);
        for _ in 0..200 {
            if hi - lo <= INVERSION_TOL {
                break;
            }
            let g = cell_mass(&self.model, base, x, 1e-14) - target;
            if g > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = self.model.density_pair(x, 1.0 - x);
            let newton = x - g / d;
            x = if d > 0.0 && newton > lo && newton < hi {
                let step = (newton - x).abs();
                if step <= 0.25 * INVERSION_TOL {
                    return newton;
                }
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        x.clamp(self.nodes[i], self.nodes[i + 1])
    }

    /// One draw.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for a in &self.atoms {
            acc += a.mass;
            if u < acc {
                return a.loc;
            }
        }
        let v = (u - acc).min(self.cont_mass * (1.0 - f64::EPSILON));
        if self.cont_mass <= 0.0 {
            return self.atoms.last().map_or(0.5, |a| a.loc);
        }
        self.invert(v.max(0.0))
    }

    /// `n` i.i.d. draws; rows are generated in parallel blocks, each on its
    /// own substream, so the output depends only on `(rng, n)`.
    pub fn sample(&self, n: usize, rng: RngState) -> Vec<f64> {
        const BLOCK: usize = 4096;
        let blocks = n.div_ceil(BLOCK);
        (0..blocks)
            .into_par_iter()
            .flat_map_iter(|b| {
                let mut r = rng.substream(b as u64).rng();
                let len = BLOCK.min(n - b * BLOCK);
                (0..len).map(|_| self.draw(&mut r)).collect::<Vec<_>>()
            })
            .collect()
    }
}

/// Kind of margins of a bivariate sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum MarginKind {
    Frechet,
    Pareto,
    Raw,
}

/// Rows `(z₁, z₂)` with nonnegative finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateSample {
    pub rows: Vec<[f64; 2]>,
    pub margin: MarginKind,
}

impl BivariateSample {
    pub fn new(rows: Vec<[f64; 2]>, margin: MarginKind) -> Result<Self> {
        if let Some(r) = rows.iter().find(|r| !r.iter().all(|v| v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "coordinates must be finite and nonnegative, got ({}, {})",
                r[0], r[1]
            )));
        }
        Ok(Self { rows, margin })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Reads a `z1,z2` CSV with header.
    pub fn read_csv<R: Read>(reader: R, margin: MarginKind) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::InvalidInput(format!("CSV lacks column '{name}'")))
        };
        let (i1, i2) = (col("z1")?, col("z2")?);
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let get = |i: usize| -> Result<f64> {
                let t = rec.get(i).unwrap_or("").trim();
                t.parse()
                    .map_err(|_| Error::InvalidInput(format!("bad number '{t}' in CSV")))
            };
            rows.push([get(i1)?, get(i2)?]);
        }
        Self::new(rows, margin)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(["z1", "z2"])?;
        for r in &self.rows {
            w.write_record([format!("{:.16e}", r[0]), format!("{:.16e}", r[1])])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn frechet<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break u;
        }
    };
    -1.0 / u.ln()
}

/// `n` pairs from the bivariate asymmetric logistic max-stable law with unit
/// Fréchet margins: `Zᵢ = max((1-bᵢ)Fᵢ, bᵢLᵢ)` where `(L₁, L₂)` is symmetric
/// logistic, `Lᵢ = (S/Eᵢ)^a` with `S` positive `a`-stable.
pub fn simulate_asym_logistic(
    a: f64,
    b1: f64,
    b2: f64,
    n: usize,
    rng: RngState,
) -> Result<BivariateSample> {
    SpectralModel::asymmetric_logistic(a, b1, b2)?;
    const BLOCK: usize = 4096;
    let blocks = n.div_ceil(BLOCK);
    let rows: Vec<[f64; 2]> = (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut r = rng.substream(b as u64).rng();
            let len = BLOCK.min(n - b * BLOCK);
            (0..len)
                .map(|_| {
                    let s = sample_positive_stable(a, &mut r);
                    let e1 = -(1.0 - r.random::<f64>()).ln();
                    let e2 = -(1.0 - r.random::<f64>()).ln();
                    let l1 = (s / e1).powf(a);
                    let l2 = (s / e2).powf(a);
                    let f1 = frechet(&mut r);
                    let f2 = frechet(&mut r);
                    [((1.0 - b1) * f1).max(b1 * l1), ((1.0 - b2) * f2).max(b2 * l2)]
                })
                .collect::<Vec<_>>()
        })
        .collect();
    BivariateSample::new(rows, MarginKind::Frechet)
}

/// Exact probability-integral map from unit Fréchet to unit Pareto margins,
/// `Ẑ = 1/(1 - exp(-1/Z))`.
pub fn to_pareto_margins(s: &BivariateSample) -> Result<BivariateSample> {
    if s.margin != MarginKind::Frechet {
        return Err(Error::InvalidInput("Pareto transform needs Fréchet margins".into()));
    }
    let map = |z: f64| -> Result<f64> {
        if !(z > 0.0) {
            return Err(Error::InvalidInput(format!("Fréchet coordinate {z} must be positive")));
        }
        Ok(-1.0 / (-1.0 / z).exp_m1())
    };
    let rows = s
        .rows
        .iter()
        .map(|r| Ok([map(r[0])?, map(r[1])?]))
        .collect::<Result<Vec<_>>>()?;
    Ok(BivariateSample {
        rows,
        margin: MarginKind::Pareto,
    })
}
