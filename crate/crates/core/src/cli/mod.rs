//! Batch command-line front end.
//!
//! Every command writes its tables as CSV, a plot as SVG and a `run.json`
//! provenance record into `--out`. Options may also come from a plain-text
//! `key = value` file given by `--config`; keys are the long flag names and
//! flags on the command line take precedence.

mod commands;
pub mod experiment;
pub mod svg;
pub mod table;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::divergence::DominatingMeasure;
use crate::{Error, Result};

pub use commands::{cmd_bounds, cmd_divergence, cmd_experiment, cmd_fit, cmd_simulate, cmd_var, render_bounds_svg, render_experiment_svg, render_var_svg};

#[derive(Parser, Debug)]
#[command(name = "robext", version, about = "Robust bounds on extremal dependence")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Square-root and exact bounds on Pickands' function over a z × δ grid.
    Bounds(BoundsArgs),
    /// Simulate, fit, estimate the divergence and compare robust and bootstrap bands.
    Experiment(ExperimentArgs),
    /// Simulate bivariate asymmetric logistic data.
    Simulate(SimulateArgs),
    /// Fit a spectral family to the extreme angles of a data set.
    Fit(FitArgs),
    /// Divergence between two models, or of data from a model.
    Divergence(DivergenceArgs),
    /// Value-at-Risk ratio bounds for a heavy-tailed portfolio.
    Var(VarArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Bounds(_) => "bounds",
            Self::Experiment(_) => "experiment",
            Self::Simulate(_) => "simulate",
            Self::Fit(_) => "fit",
            Self::Divergence(_) => "divergence",
            Self::Var(_) => "var",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Self::Bounds(a) => &a.common,
            Self::Experiment(a) => &a.common,
            Self::Simulate(a) => &a.common,
            Self::Fit(a) => &a.common,
            Self::Divergence(a) => &a.common,
            Self::Var(a) => &a.common,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Dominating measure: p (the reference model) or leb.
    #[arg(long)]
    pub mu: Option<String>,
    #[arg(long, conflicts_with = "delta_grid")]
    pub delta: Option<f64>,
    /// `a:b:n`, n equally spaced radii.
    #[arg(long)]
    pub delta_grid: Option<String>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Solve for the exact bounds too.
    #[arg(long)]
    pub exact: bool,
    /// `key = value` option file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Bivariate data, CSV with columns z1,z2.
    #[arg(long)]
    pub data: Option<PathBuf>,
}

impl Common {
    pub fn mu_or(&self, default: DominatingMeasure) -> Result<DominatingMeasure> {
        self.mu.as_deref().map_or(Ok(default), str::parse)
    }

    /// Radii from `--delta` or `--delta-grid`.
    pub fn deltas(&self) -> Result<Option<Vec<f64>>> {
        let v = match (&self.delta, &self.delta_grid) {
            (Some(d), _) => vec![*d],
            (None, Some(g)) => table::parse_grid(g)?,
            (None, None) => return Ok(None),
        };
        if let Some(d) = v.iter().find(|d| !(**d >= 0.0) || !d.is_finite()) {
            return Err(Error::InvalidInput(format!("radius {d} must be finite and nonnegative")));
        }
        Ok(Some(v))
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "HR(0.6)")]
    pub model: String,
    #[arg(long, conflicts_with = "z_grid")]
    pub z: Option<f64>,
    #[arg(long)]
    pub z_grid: Option<String>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub common: Common,
    /// One of the four preset experiments.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub id: Option<u8>,
    #[arg(long)]
    pub true_model: Option<String>,
    #[arg(long)]
    pub fit_family: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub boot: Option<usize>,
    #[arg(long)]
    pub z_grid: Option<String>,
    /// Kernel bandwidth for the divergence estimate.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long)]
    pub endpoint_tol: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "AL(0.4,0.7,1)")]
    pub true_model: String,
    #[arg(long, default_value_t = 20_000)]
    pub n: usize,
    /// Transform to unit Pareto margins.
    #[arg(long)]
    pub pareto: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub fit_family: String,
    #[arg(long, default_value_t = experiment::DEFAULT_K)]
    pub k: usize,
    /// Simulate from this model when no data is given.
    #[arg(long, default_value = "AL(0.4,0.7,1)")]
    pub true_model: String,
    #[arg(long, default_value_t = 20_000)]
    pub n: usize,
    #[arg(long)]
    pub z_grid: Option<String>,
    #[arg(long)]
    pub endpoint_tol: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DivergenceArgs {
    #[command(flatten)]
    pub common: Common,
    /// The model whose divergence is measured; omit to estimate from data.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub reference: String,
    #[arg(long, default_value_t = experiment::DEFAULT_K)]
    pub k: usize,
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long)]
    pub endpoint_tol: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct VarArgs {
    #[command(flatten)]
    pub common: Common,
    /// Portfolio weights, comma separated.
    #[arg(long, default_value = "1,1")]
    pub weights: String,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    /// Marginal scale constants, comma separated, the first equal to 1.
    #[arg(long)]
    pub scales: Option<String>,
    /// dirichlet:<β>, comonotone, independent, or model:<bivariate model>.
    #[arg(long, default_value = "dirichlet:1")]
    pub sampler: String,
    #[arg(long, default_value_t = crate::portfolio::DEFAULT_N)]
    pub n: usize,
}

/// Flags that exclude each other, so a command-line flag also displaces its
/// partner from the config file.
const EXCLUSIVE: [[&str; 2]; 2] = [["delta", "delta-grid"], ["z", "z-grid"]];

fn read_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidInput(format!("{}:{}: expected key = value", path.display(), i + 1)))?;
        out.push((k.trim().trim_start_matches("--").to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Splices the config file's options in front of the command-line flags,
/// dropping any the command line sets itself.
fn merge_config(args: Vec<String>) -> Result<Vec<String>> {
    let path = args.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            args.get(i + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(String::from)
        }
    });
    let Some(path) = path else { return Ok(args) };
    let given: Vec<&str> = args
        .iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a))
        .collect();
    let displaced = |k: &str| {
        given.contains(&k)
            || EXCLUSIVE
                .iter()
                .any(|pair| pair.contains(&k) && pair.iter().any(|p| given.contains(p)))
    };
    let mut extra = Vec::new();
    for (k, v) in read_config(Path::new(&path))? {
        if k == "config" || displaced(&k) {
            continue;
        }
        match v.as_str() {
            "true" => extra.push(format!("--{k}")),
            "false" => {}
            _ => {
                extra.push(format!("--{k}"));
                extra.push(v);
            }
        }
    }
    // the subcommand is the first argument
    let at = 2.min(args.len());
    let mut merged = args[..at].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&args[at..]);
    Ok(merged)
}

/// Parses `args` (program name first), merges the config file, and runs the
/// command.
pub fn run(args: Vec<String>) -> Result<()> {
    let args = merge_config(args)?;
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return Ok(());
            }
            return Err(Error::InvalidInput(e.render().to_string()));
        }
    };
    execute(&cli.command)
}

pub fn execute(cmd: &Command) -> Result<()> {
    let out = &cmd.common().out;
    std::fs::create_dir_all(out)?;
    let files = match cmd {
        Command::Bounds(a) => cmd_bounds(a)?,
        Command::Experiment(a) => cmd_experiment(a)?,
        Command::Simulate(a) => cmd_simulate(a)?,
        Command::Fit(a) => cmd_fit(a)?,
        Command::Divergence(a) => cmd_divergence(a)?,
        Command::Var(a) => cmd_var(a)?,
    };
    write_run_json(cmd, &files)
}

#[derive(Serialize)]
struct RunRecord<'a> {
    command: &'static str,
    version: &'static str,
    seed: u64,
    config: &'a Command,
    outputs: &'a [String],
}

fn write_run_json(cmd: &Command, files: &[String]) -> Result<()> {
    let rec = RunRecord {
        command: cmd.name(),
        version: env!("CARGO_PKG_VERSION"),
        seed: cmd.common().seed,
        config: cmd,
        outputs: files,
    };
    let mut s = serde_json::to_string_pretty(&rec)?;
    s.push('\n');
    std::fs::write(cmd.common().out.join("run.json"), s)?;
    Ok(())
}
