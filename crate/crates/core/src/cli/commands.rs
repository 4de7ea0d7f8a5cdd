use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use rayon::prelude::*;

use super::experiment::{default_z_grid, run_experiment, ExperimentSpec, ATOM_ENDPOINT_TOL};
use super::svg::{render, Panel, Series, Style};
use super::table::{fmt_f64, fmt_opt, parse_grid, parse_list, Table};
use super::{BoundsArgs, DivergenceArgs, ExperimentArgs, FitArgs, SimulateArgs, VarArgs};
use crate::bounds::{delta_star, exact_bound, moments_for_pickands, optimizer_density, sqrt_bound, Direction, Regime};
use crate::divergence::{divergence, estimate_divergence, DominatingMeasure};
use crate::inference::{fit_mle, pickands_curve, polar_topk, AngularSample, RAW_ENDPOINT_TOL};
use crate::numerics::RngState;
use crate::portfolio::{var_bounds_grid, PortfolioSpec, SimplexSampler};
use crate::spectral::{simulate_asym_logistic, to_pareto_margins, BivariateSample, Family, MarginKind, SpectralModel};
use crate::{Error, Result};

const DEFAULT_DELTA_GRID: &str = "0:1:51";
const DENSITY_POINTS: usize = 199;

fn regime_label(r: Regime) -> &'static str {
    match r {
        Regime::SqrtExact => "sqrt_exact",
        Regime::ExactSolved => "exact_solved",
        Regime::Degenerate => "degenerate",
        Regime::Conservative => "conservative",
    }
}

fn read_data(path: &Path) -> Result<BivariateSample> {
    BivariateSample::read_csv(BufReader::new(File::open(path)?), MarginKind::Raw)
}

fn simulate_model(spec: &str, n: usize, seed: u64) -> Result<BivariateSample> {
    match spec.parse::<SpectralModel>()? {
        SpectralModel::AsymmetricLogistic { a, b1, b2 } => simulate_asym_logistic(a, b1, b2, n, RngState::new(seed, 0)),
        m => Err(Error::InvalidInput(format!("can only simulate from an asymmetric logistic law, not {m}"))),
    }
}

fn default_tol(family: Option<Family>) -> f64 {
    if family.is_some_and(Family::has_atoms) {
        ATOM_ENDPOINT_TOL
    } else {
        RAW_ENDPOINT_TOL
    }
}

fn write_svg(dir: &Path, name: &str, svg: String) -> Result<String> {
    std::fs::write(dir.join(name), svg)?;
    Ok(name.to_string())
}

/// One `bounds.csv` row; `exact` requests the optimality solve.
fn bound_row(model: &SpectralModel, mu: &DominatingMeasure, z: f64, delta: f64, base: &ZInfo, exact: bool) -> Result<Vec<String>> {
    let a = base.a;
    let mut notes = Vec::new();
    let (sl, sh) = if delta == 0.0 {
        (a, a)
    } else {
        (sqrt_bound(&base.ms, delta, Direction::Lower), sqrt_bound(&base.ms, delta, Direction::Upper))
    };
    if sl < z.max(1.0 - z) || sh > 1.0 {
        notes.push("sqrt_outside_triangle");
    }
    let mut side = |dir: Direction, sqrt: f64, ds: f64| -> Result<(Option<f64>, &'static str)> {
        if delta == 0.0 || delta <= ds {
            return Ok((Some(sqrt), "sqrt_exact"));
        }
        if !exact {
            return Ok((None, "not_computed"));
        }
        let r = exact_bound(model, z, mu, delta, dir)?;
        if r.regime == Regime::Conservative {
            notes.push(match dir {
                Direction::Lower => "solver_failed_lo",
                Direction::Upper => "solver_failed_hi",
            });
        }
        Ok((r.exact_value, regime_label(r.regime)))
    };
    let (el, rl) = side(Direction::Lower, sl, base.ds_lo)?;
    let (eh, rh) = side(Direction::Upper, sh, base.ds_hi)?;
    Ok(vec![
        fmt_f64(z),
        fmt_f64(delta),
        fmt_f64(a),
        fmt_f64(sl),
        fmt_f64(sh),
        fmt_opt(el),
        fmt_opt(eh),
        rl.into(),
        rh.into(),
        fmt_f64(base.ds_lo),
        fmt_f64(base.ds_hi),
        notes.join(";"),
    ])
}

struct ZInfo {
    a: f64,
    ms: crate::bounds::MomentSummary,
    ds_lo: f64,
    ds_hi: f64,
}

pub fn cmd_bounds(args: &BoundsArgs) -> Result<Vec<String>> {
    let c = &args.common;
    let model: SpectralModel = args.model.parse()?;
    let mu = c.mu_or(DominatingMeasure::ReferenceP)?;
    let zs = match (&args.z, &args.z_grid) {
        (Some(z), _) => vec![*z],
        (None, Some(g)) => parse_grid(g)?,
        (None, None) => vec![0.4],
    };
    if let Some(z) = zs.iter().find(|z| !(**z > 0.0 && **z < 1.0)) {
        return Err(Error::InvalidInput(format!("z = {z} must lie in (0, 1)")));
    }
    let deltas = match c.deltas()? {
        Some(d) => d,
        None => parse_grid(DEFAULT_DELTA_GRID)?,
    };
    let info = zs
        .par_iter()
        .map(|&z| {
            Ok(ZInfo {
                a: model.pickands(z)?,
                ms: moments_for_pickands(&model, z, &mu)?,
                ds_lo: delta_star(&model, z, &mu, Direction::Lower)?,
                ds_hi: delta_star(&model, z, &mu, Direction::Upper)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(usize, usize)> = (0..zs.len()).flat_map(|i| (0..deltas.len()).map(move |j| (i, j))).collect();
    let rows = cells
        .par_iter()
        .map(|&(i, j)| bound_row(&model, &mu, zs[i], deltas[j], &info[i], c.exact))
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&[
        "z", "delta", "A", "sqrt_lo", "sqrt_hi", "exact_lo", "exact_hi", "regime_lo", "regime_hi", "delta_star_lo",
        "delta_star_hi", "notes",
    ]);
    rows.into_iter().for_each(|r| t.push(r));
    t.write(&c.out.join("bounds.csv"))?;

    // optimisers at the first z and the largest radius
    let (z0, dmax) = (zs[0], deltas.iter().copied().fold(0.0, f64::max));
    let w: Vec<f64> = (1..=DENSITY_POINTS).map(|i| i as f64 / (DENSITY_POINTS + 1) as f64).collect();
    let reference: Vec<f64> = w.iter().map(|&x| model.density_pair(x, 1.0 - x)).collect();
    let opt = |dir: Direction| -> Vec<f64> {
        let m = exact_bound(&model, z0, &mu, dmax, dir).and_then(|r| optimizer_density(&r, &model, z0, &mu));
        match m {
            Ok(m) => w.iter().map(|&x| m.density_at(x)).collect(),
            Err(_) => vec![f64::NAN; w.len()],
        }
    };
    let (up, lo) = (opt(Direction::Upper), opt(Direction::Lower));
    let mut d = Table::new(&["w", "reference", "upper", "lower"]);
    for i in 0..w.len() {
        d.push(vec![fmt_f64(w[i]), fmt_f64(reference[i]), fmt_f64(up[i]), fmt_f64(lo[i])]);
    }
    d.write(&c.out.join("density.csv"))?;
    let svg = render_bounds_svg(&c.out)?;
    Ok(vec!["bounds.csv".into(), "density.csv".into(), write_svg(&c.out, "bounds.svg", svg)?])
}

/// The bound curves and optimiser densities, drawn from `bounds.csv` and
/// `density.csv` in `dir`.
pub fn render_bounds_svg(dir: &Path) -> Result<String> {
    let t = Table::read(&dir.join("bounds.csv"))?;
    let (z, delta) = (t.column("z")?, t.column("delta")?);
    let single_z = z.iter().all(|v| *v == z[0]);
    let dmax = delta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let keep: Vec<usize> = (0..z.len()).filter(|&i| single_z || delta[i] == dmax).collect();
    let pick = |name: &str| -> Result<Vec<f64>> {
        let v = t.column(name)?;
        Ok(keep.iter().map(|&i| v[i]).collect())
    };
    let x = if single_z { pick("delta")? } else { pick("z")? };
    let mut curves = vec![
        Series::line("A", "#555555", &x, &pick("A")?),
        Series::line("sqrt upper", "#2ca02c", &x, &pick("sqrt_hi")?),
        Series::line("sqrt lower", "#2ca02c", &x, &pick("sqrt_lo")?),
        Series::line("exact upper", "#000000", &x, &pick("exact_hi")?),
        Series::line("exact lower", "#000000", &x, &pick("exact_lo")?),
    ];
    let title = if single_z {
        format!("bounds on A({})", z.first().map_or(String::new(), |v| format!("{v:.3}")))
    } else {
        let zz = pick("z")?;
        let tri: Vec<f64> = zz.iter().map(|v| v.max(1.0 - v)).collect();
        curves.push(Series::dashed("triangle", "#999999", &x, &tri));
        format!("bounds at delta = {dmax:.3}")
    };
    let d = Table::read(&dir.join("density.csv"))?;
    let w = d.column("w")?;
    let dens = Panel {
        title: "optimiser densities".into(),
        x_label: "w".into(),
        y_label: "density".into(),
        series: vec![
            Series::dashed("reference", "#555555", &w, &d.column("reference")?),
            Series::line("upper", "#d62728", &w, &d.column("upper")?),
            Series::line("lower", "#1f77b4", &w, &d.column("lower")?),
        ],
    };
    let main = Panel {
        title,
        x_label: if single_z { "delta".into() } else { "z".into() },
        y_label: "A".into(),
        series: curves,
    };
    Ok(render(&[main, dens]))
}

pub fn cmd_experiment(args: &ExperimentArgs) -> Result<Vec<String>> {
    let c = &args.common;
    let mut spec = match args.id {
        Some(id) => ExperimentSpec::preset(id, c.seed)?,
        None => {
            let fam = args
                .fit_family
                .as_deref()
                .ok_or_else(|| Error::InvalidInput("a custom experiment needs --fit-family".into()))?;
            ExperimentSpec {
                true_model: None,
                data: None,
                n: 20_000,
                k: super::experiment::DEFAULT_K,
                fit_family: fam.parse()?,
                mu: DominatingMeasure::ReferenceP,
                boot: super::experiment::DEFAULT_BOOT,
                z: default_z_grid(),
                seed: c.seed,
                delta: None,
                bandwidth: None,
                endpoint_tol: None,
            }
        }
    };
    if let Some(m) = &args.true_model {
        spec.true_model = Some(m.parse()?);
    }
    if let Some(f) = &args.fit_family {
        spec.fit_family = f.parse()?;
    }
    if let Some(p) = &c.data {
        spec.data = Some(read_data(p)?);
    }
    spec.n = args.n.unwrap_or(spec.n);
    spec.k = args.k.unwrap_or(spec.k);
    spec.boot = args.boot.unwrap_or(spec.boot);
    spec.mu = c.mu_or(spec.mu.clone())?;
    spec.delta = c.delta;
    spec.bandwidth = args.bandwidth;
    spec.endpoint_tol = args.endpoint_tol;
    if let Some(g) = &args.z_grid {
        spec.z = parse_grid(g)?;
    }
    if c.delta_grid.is_some() {
        return Err(Error::InvalidInput("experiment takes a single --delta, not a grid".into()));
    }
    let r = run_experiment(&spec)?;
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }

    let mut t = Table::new(&["z", "A_true", "A_fit", "boot_lo", "boot_hi", "robust_lo", "robust_hi"]);
    for i in 0..r.z.len() {
        t.push(vec![
            fmt_f64(r.z[i]),
            r.a_true.get(i).map_or(String::new(), |v| fmt_f64(*v)),
            fmt_f64(r.a_fit[i]),
            fmt_f64(r.boot_lo[i]),
            fmt_f64(r.boot_hi[i]),
            fmt_f64(r.robust_lo[i]),
            fmt_f64(r.robust_hi[i]),
        ]);
    }
    t.write(&c.out.join("experiment.csv"))?;

    let mut s = Table::new(&[
        "true_model", "fitted_model", "family", "params", "log_likelihood", "mu", "n", "k", "boot", "count0", "count1",
        "delta_hat", "delta_true", "delta_used", "boot_failures", "warnings",
    ]);
    s.push(vec![
        spec.true_model.as_ref().map_or(String::new(), |m| m.to_string()),
        r.fit.model.to_string(),
        spec.fit_family.tag().into(),
        r.fit.model.params().iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(";"),
        fmt_f64(r.fit.log_likelihood),
        spec.mu.label().into(),
        spec.data.as_ref().map_or(spec.n, |d| d.len()).to_string(),
        spec.k.to_string(),
        spec.boot.to_string(),
        r.angles.count0().to_string(),
        r.angles.count1().to_string(),
        fmt_f64(r.delta_hat),
        fmt_f64(r.delta_true),
        fmt_f64(r.delta_used),
        r.boot_failures.to_string(),
        r.warnings.join("; "),
    ]);
    s.write(&c.out.join("summary.csv"))?;

    let mut a = Table::new(&["angle"]);
    for v in &r.angles.angles {
        a.push(vec![fmt_f64(*v)]);
    }
    a.write(&c.out.join("angles.csv"))?;
    let svg = render_experiment_svg(&c.out)?;
    Ok(vec![
        "experiment.csv".into(),
        "summary.csv".into(),
        "angles.csv".into(),
        write_svg(&c.out, "experiment.svg", svg)?,
    ])
}

/// Histogram of the angles next to the Pickands curves and bands, drawn from
/// `angles.csv` and `experiment.csv` in `dir`.
pub fn render_experiment_svg(dir: &Path) -> Result<String> {
    const BINS: usize = 20;
    let angles = Table::read(&dir.join("angles.csv"))?.column("angle")?;
    let mut counts = [0usize; BINS];
    for &v in &angles {
        counts[((v * BINS as f64) as usize).min(BINS - 1)] += 1;
    }
    let width = 1.0 / BINS as f64;
    let hist = Series {
        label: format!("{} angles", angles.len()),
        color: "#1f77b4",
        style: Style::Bars(width),
        points: (0..BINS)
            .map(|i| ((i as f64 + 0.5) * width, counts[i] as f64 / (angles.len().max(1) as f64 * width)))
            .collect(),
    };
    let t = Table::read(&dir.join("experiment.csv"))?;
    let z = t.column("z")?;
    let tri: Vec<f64> = z.iter().map(|v| v.max(1.0 - v)).collect();
    let curves = vec![
        Series::line("true", "#000000", &z, &t.column("A_true")?),
        Series::line("fitted", "#d62728", &z, &t.column("A_fit")?),
        Series::dashed("bootstrap", "#1f77b4", &z, &t.column("boot_lo")?),
        Series::dashed("", "#1f77b4", &z, &t.column("boot_hi")?),
        Series::line("robust", "#2ca02c", &z, &t.column("robust_lo")?),
        Series::line("", "#2ca02c", &z, &t.column("robust_hi")?),
        Series::dashed("", "#999999", &z, &tri),
    ];
    Ok(render(&[
        Panel {
            title: "extreme angles".into(),
            x_label: "w".into(),
            y_label: "density".into(),
            series: vec![hist],
        },
        Panel {
            title: "Pickands' function".into(),
            x_label: "z".into(),
            y_label: "A".into(),
            series: curves,
        },
    ]))
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Vec<String>> {
    let c = &args.common;
    let mut s = simulate_model(&args.true_model, args.n, c.seed)?;
    if args.pareto {
        s = to_pareto_margins(&s)?;
    }
    s.write_csv(std::io::BufWriter::new(File::create(c.out.join("sample.csv"))?))?;
    Ok(vec!["sample.csv".into()])
}

fn angles_from(c: &super::Common, simulate: Option<(&str, usize)>, k: usize, tol: f64) -> Result<AngularSample> {
    let data = match (&c.data, simulate) {
        (Some(p), _) => read_data(p)?,
        (None, Some((m, n))) => to_pareto_margins(&simulate_model(m, n, c.seed)?)?,
        (None, None) => return Err(Error::InvalidInput("need --data".into())),
    };
    polar_topk(&data, k, tol)
}

pub fn cmd_fit(args: &FitArgs) -> Result<Vec<String>> {
    let c = &args.common;
    let fam: Family = args.fit_family.parse()?;
    let tol = args.endpoint_tol.unwrap_or(default_tol(Some(fam)));
    let s = angles_from(c, Some((&args.true_model, args.n)), args.k, tol)?;
    let fit = fit_mle(fam, &s)?;
    let mut t = Table::new(&["family", "model", "params", "log_likelihood", "k", "threshold", "count0", "count1", "evaluations"]);
    t.push(vec![
        fam.tag().into(),
        fit.model.to_string(),
        fit.model.params().iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(";"),
        fmt_f64(fit.log_likelihood),
        s.k().to_string(),
        fmt_f64(s.threshold),
        s.count0().to_string(),
        s.count1().to_string(),
        fit.evaluations.to_string(),
    ]);
    t.write(&c.out.join("fit.csv"))?;
    let z = match &args.z_grid {
        Some(g) => parse_grid(g)?,
        None => default_z_grid(),
    };
    let a = pickands_curve(&fit.model, &z)?;
    let mut p = Table::new(&["z", "A"]);
    for (zz, aa) in z.iter().zip(&a) {
        p.push(vec![fmt_f64(*zz), fmt_f64(*aa)]);
    }
    p.write(&c.out.join("pickands.csv"))?;
    Ok(vec!["fit.csv".into(), "pickands.csv".into()])
}

pub fn cmd_divergence(args: &DivergenceArgs) -> Result<Vec<String>> {
    let c = &args.common;
    let p: SpectralModel = args.reference.parse()?;
    let mu = c.mu_or(DominatingMeasure::ReferenceP)?;
    let (source, d) = match &args.model {
        Some(q) => {
            let q: SpectralModel = q.parse()?;
            (q.to_string(), divergence(&q, &p, &mu)?)
        }
        None => {
            let tol = args.endpoint_tol.unwrap_or(default_tol(p.family()));
            let s = angles_from(c, None, args.k, tol)?;
            ("data".to_string(), estimate_divergence(&s, &p, &mu, args.bandwidth)?)
        }
    };
    if mu.is_reference() && d.is_infinite() {
        eprintln!("warning: divergence is infinite under mu=P; consider --mu leb");
    }
    let mut t = Table::new(&["source", "reference", "mu", "divergence"]);
    t.push(vec![source, p.to_string(), mu.label().into(), fmt_f64(d)]);
    t.write(&c.out.join("divergence.csv"))?;
    Ok(vec!["divergence.csv".into()])
}

fn parse_sampler(s: &str) -> Result<SimplexSampler> {
    let s = s.trim();
    let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
    match kind.to_ascii_lowercase().as_str() {
        "dirichlet" => Ok(SimplexSampler::Dirichlet {
            beta: if arg.is_empty() { 1.0 } else { super::table::parse_f64(arg)? },
        }),
        "model" => Ok(SimplexSampler::Bivariate(arg.parse()?)),
        // dimension filled in by the caller
        "comonotone" | "independent" => Ok(SimplexSampler::Atoms {
            points: Vec::new(),
            probs: Vec::new(),
        }),
        _ => Err(Error::InvalidInput(format!("unknown sampler '{s}'"))),
    }
}

pub fn cmd_var(args: &VarArgs) -> Result<Vec<String>> {
    let c = &args.common;
    let deltas = c
        .deltas()?
        .ok_or_else(|| Error::InvalidInput("var needs --delta or --delta-grid".into()))?;
    let w = parse_list(&args.weights)?;
    let d = w.len();
    let scales = match &args.scales {
        Some(s) => parse_list(s)?,
        None => vec![1.0; d],
    };
    let sampler = match args.sampler.trim().to_ascii_lowercase().as_str() {
        "comonotone" => SimplexSampler::comonotone(d),
        "independent" => SimplexSampler::independent(d),
        _ => parse_sampler(&args.sampler)?,
    };
    let spec = PortfolioSpec::new(w, args.alpha, scales, sampler)?;
    let (m, bs) = var_bounds_grid(&spec, &deltas, args.n, RngState::new(c.seed, 0), c.exact)?;
    let mut t = Table::new(&[
        "delta", "eX_lo", "eX_hi", "ratio_lo", "ratio_hi", "mc_stderr", "exact_lo", "exact_hi", "notes",
    ]);
    for b in &bs {
        let mut notes = Vec::new();
        if b.clipped_lower {
            notes.push("clipped_lo");
        }
        if b.clipped_upper {
            notes.push("clipped_hi");
        }
        if m.singular {
            notes.push("singular_covariance");
        }
        if c.exact && (b.exact_lower.is_none() || b.exact_upper.is_none()) {
            notes.push("exact_failed");
        }
        t.push(vec![
            fmt_f64(b.delta),
            fmt_f64(b.ex_lower),
            fmt_f64(b.ex_upper),
            fmt_f64(b.ratio_lower),
            fmt_f64(b.ratio_upper),
            fmt_f64(b.ratio_upper_se),
            fmt_opt(b.exact_lower),
            fmt_opt(b.exact_upper),
            notes.join(";"),
        ]);
    }
    t.write(&c.out.join("var.csv"))?;
    let svg = render_var_svg(&c.out)?;
    Ok(vec!["var.csv".into(), write_svg(&c.out, "var.svg", svg)?])
}

/// VaR ratio bounds against the radius, drawn from `var.csv` in `dir`.
pub fn render_var_svg(dir: &Path) -> Result<String> {
    let t = Table::read(&dir.join("var.csv"))?;
    let d = t.column("delta")?;
    Ok(render(&[Panel {
        title: "asymptotic VaR ratio".into(),
        x_label: "delta".into(),
        y_label: "ratio".into(),
        series: vec![
            Series::line("upper", "#d62728", &d, &t.column("ratio_hi")?),
            Series::line("lower", "#1f77b4", &d, &t.column("ratio_lo")?),
        ],
    }]))
}
