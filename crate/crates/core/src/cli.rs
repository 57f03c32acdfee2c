//! Subcommands of the `fde-density` binary.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::basis::BasisSpec;
use crate::config::{RunManifest, Settings};
use crate::error::{Error, Result};
use crate::estimator::{estimate_coefficients, Sample};
use crate::experiment::{m_sweep, run_experiment, EvalGrid, ExperimentConfig, MiseReport};
use crate::fbm::{generate_fbm_path, TimeGrid};
use crate::io::{self, fmt_f64};
use crate::sde::{simulate_trajectory, Trajectory, TrajectoryConfig};
use crate::selection::{calibrate_kappa, proposal_set, select_model, PenaltyConfig, DEFAULT_KAPPA};
use crate::DEFAULT_M_MAX;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "fde-density", version, about = "Stationary density estimation for fBM-driven SDEs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one fBM path and its Euler trajectory.
    Simulate(SimulateArgs),
    /// Projection estimate from a trajectory CSV, fixed m or adaptive.
    Estimate(EstimateArgs),
    /// Penalized dimension selection on a trajectory CSV.
    Select(SelectArgs),
    /// Monte Carlo MISE over replicated datasets.
    Experiment(ExperimentArgs),
    /// MISE per dimension with shared datasets.
    Sweep(ExperimentArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Settings file (`key = value` lines or JSON; a previous manifest.json also works).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "FDE_DENSITY_OUT", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub settings: Settings,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Trajectory CSV with header `t,X`.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub settings: Settings,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub estimate: EstimateArgs,
    /// Penalty constants to scan for a stable m_hat.
    #[arg(long = "kappa-grid", value_delimiter = ',')]
    pub kappa_grid: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub common: Common,
    /// Load the settings of published figure 1 (H = 0.5) or 2 (H = 0.7).
    #[arg(long = "paper-figure")]
    pub paper_figure: Option<u8>,
    #[command(flatten)]
    pub settings: Settings,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Estimate(a) => cmd_estimate(&a).map(|_| ()),
        Command::Select(a) => cmd_select(&a),
        Command::Experiment(a) => cmd_experiment(&a).map(|_| ()),
        Command::Sweep(a) => cmd_sweep(&a).map(|_| ()),
    }
}

/// Maps an error to the process exit code.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

fn manifest(command: &str, seed: u64, out: &Path, resolved: impl Serialize) -> Result<()> {
    RunManifest::new(command, seed, out, resolved)?.write(out).map(|_| ())
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let s = Settings::load(args.common.config.as_deref(), &args.settings)?;
    let euler = s.euler()?;
    let hurst = s.hurst()?;
    let resolved = Settings {
        h: Some(hurst.value()),
        theta: Some(s.theta()),
        sigma: Some(euler.sigma),
        x0: Some(euler.x0),
        t: Some(euler.horizon),
        n: Some(euler.n),
        seed: Some(s.seed()),
        burn_in: Some(euler.burn_in_fraction),
        drift: Some(s.drift.clone().unwrap_or_else(|| "linear".into())),
        alpha: s.alpha,
        ..Settings::default()
    };
    let out = &args.common.out;
    manifest("simulate", s.seed(), out, &resolved)?;
    let path = generate_fbm_path(euler.grid()?, hurst, s.seed())?;
    let traj = simulate_trajectory(&euler, &path)?;
    path.write_csv(&out.join("fbm.csv"))?;
    traj.write_csv(&out.join("trajectory.csv"))?;
    println!("wrote {} steps of {} to {}", traj.values.len(), euler.drift.label(), out.display());
    Ok(())
}

/// Reads `t,X` rows; the step is `t_1` and the horizon `t_n`.
pub fn read_trajectory(path: &Path, burn_in: f64) -> Result<Trajectory> {
    let cols = io::read_columns(path, &["t", "X"])?;
    let (t, x) = (&cols[0], &cols[1]);
    if t.is_empty() {
        return Err(Error::Parse { path: path.to_owned(), line: 2, reason: "no data rows".into() });
    }
    let grid = TimeGrid::new(t.len(), t[0])?;
    if !(0.0..1.0).contains(&burn_in) {
        return Err(Error::invalid("burn_in", format!("burn-in fraction must lie in [0,1), got {burn_in}")));
    }
    let config = TrajectoryConfig {
        x0: f64::NAN,
        sigma: f64::NAN,
        horizon: *t.last().expect("nonempty"),
        n: t.len(),
        burn_in_fraction: burn_in,
        drift: format!("read from {}", path.display()),
    };
    Trajectory::from_values(grid, x.clone(), config, 0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateOutcome {
    pub m: usize,
    pub theta_hat: Vec<f64>,
    pub proposal: Option<Vec<usize>>,
}

pub fn cmd_estimate(args: &EstimateArgs) -> Result<EstimateOutcome> {
    let s = Settings::load(args.common.config.as_deref(), &args.settings)?;
    let out = &args.common.out;
    let traj = read_trajectory(&args.input, s.burn_in.unwrap_or(0.0))?;
    let sample = Sample::from_trajectory(&traj)?;
    let support = s.support()?;
    let requested = match s.m.as_slice() {
        [] => None,
        [m] => Some(*m),
        more => return Err(Error::invalid("m", format!("estimate takes one dimension, got {more:?}"))),
    };
    let mut resolved = s.clone();
    resolved.a = Some(support.a());
    resolved.b = Some(support.b());
    resolved.burn_in = Some(traj.config.burn_in_fraction);
    manifest("estimate", 0, out, &resolved)?;

    let (estimate, proposal) = if s.adaptive {
        let (sel, proposal) = adaptive_selection(&s, &sample, requested)?;
        sel.write_csv(&out.join("selection.csv"))?;
        let est = sel.estimate();
        println!("m_hat = {} over M = {{1..{}}}{}", sel.m_hat, sel.proposal.max(), if sel.proposal.theoretical { "" } else { " (override)" });
        (est, Some(proposal))
    } else {
        let m = requested.ok_or_else(|| Error::invalid("m", "fixed-dimension estimation needs --m (or pass --adaptive)"))?;
        let spec = BasisSpec::trigonometric(support, m)?;
        (estimate_coefficients(&sample, &spec, m)?, None)
    };
    estimate.write_coefficients_csv(&out.join("coefficients.csv"))?;
    let xs = EvalGrid::new(support, s.grid_n.unwrap_or(70))?.points();
    estimate.write_grid_csv(&out.join("estimate.csv"), &xs)?;
    Ok(EstimateOutcome { m: estimate.m(), theta_hat: estimate.theta_hat, proposal })
}

/// With `cap = Some(m)` the candidates are limited to `1..=m`, and `m` must itself
/// be admissible unless an override is in force.
fn adaptive_selection(s: &Settings, sample: &Sample, cap: Option<usize>) -> Result<(crate::selection::SelectionResult, Vec<usize>)> {
    let h = s.h.ok_or_else(|| Error::invalid("H", "adaptive selection needs the Hurst index (--H)"))?;
    let hurst = crate::fbm::HurstIndex::new(h)?;
    let support = s.support()?;
    let pen = PenaltyConfig::for_sample(sample, hurst, s.kappa.unwrap_or(DEFAULT_KAPPA))?.with_override(s.m_override);
    let m_max = s.m_override.unwrap_or(DEFAULT_M_MAX).max(cap.unwrap_or(1));
    let full = proposal_set(&BasisSpec::trigonometric(support, m_max)?, &pen)?;
    let spec = match cap {
        Some(m) if !full.contains(m) => return Err(Error::NotInProposalSet { m, proposal: full.members }),
        Some(m) => BasisSpec::trigonometric(support, m)?,
        None => BasisSpec::trigonometric(support, m_max)?,
    };
    if full.theoretical && full.members.len() == 1 {
        eprintln!("warning: the proposal set is the singleton {{1}} at n*delta = {}; consider --m-override", sample.span());
    }
    let pen = match (s.m_override, cap) {
        (Some(o), Some(m)) => pen.with_override(Some(o.min(m))),
        _ => pen,
    };
    Ok((select_model(sample, &spec, &pen)?, full.members))
}

pub fn cmd_select(args: &SelectArgs) -> Result<()> {
    let e = &args.estimate;
    let mut s = Settings::load(e.common.config.as_deref(), &e.settings)?;
    s.adaptive = true;
    let out = &e.common.out;
    let traj = read_trajectory(&e.input, s.burn_in.unwrap_or(0.0))?;
    let sample = Sample::from_trajectory(&traj)?;
    let cap = s.m.first().copied();
    manifest("select", 0, out, &s)?;
    let (sel, _) = adaptive_selection(&s, &sample, cap)?;
    sel.write_csv(&out.join("selection.csv"))?;
    sel.estimate().write_coefficients_csv(&out.join("coefficients.csv"))?;
    println!("m_hat = {}", sel.m_hat);
    if !args.kappa_grid.is_empty() {
        let spec = sel.full_estimate.spec;
        let pen = PenaltyConfig::for_sample(&sample, crate::fbm::HurstIndex::new(s.h.unwrap_or(0.5))?, 1.0)?
            .with_override((!sel.proposal.theoretical).then(|| sel.proposal.max()).or(s.m_override));
        let cal = calibrate_kappa(&sample, &spec, &pen, &args.kappa_grid)?;
        io::write_rows(
            &out.join("calibration.csv"),
            &["kappa", "m_hat"],
            cal.points.iter().map(|(k, m)| vec![fmt_f64(*k), m.to_string()]),
        )?;
        let (m, lo, hi) = cal.plateau;
        println!("stable m_hat = {m} for kappa in [{lo}, {hi}]");
    }
    Ok(())
}

fn experiment_config(args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let base = match args.paper_figure {
        Some(f) => Settings::from_experiment(&ExperimentConfig::paper_figure(f)?),
        None => Settings::default(),
    };
    let file = match args.common.config.as_deref() {
        Some(p) => Settings::from_file(p)?,
        None => Settings::default(),
    };
    base.overlay(&file).overlay(&args.settings).experiment()
}

fn write_report(report: &MiseReport, out: &Path, plots: bool) -> Result<()> {
    report.write_report_csv(&out.join("report.csv"))?;
    report.write_summary_csv(&out.join("summary.csv"))?;
    if report.config.adaptive.is_some() {
        report.write_adaptive_csv(&out.join("adaptive.csv"))?;
    }
    if plots {
        for &m in &report.config.m_values {
            report.write_plot_csv(&out.join(format!("plot_m{m}.csv")), m)?;
        }
    }
    for s in &report.summary {
        println!("m = {:>3}  avg MISE = {:.4}  sd = {:.4}", s.m, s.avg_mise, s.sd_mise);
    }
    if let Some(a) = &report.adaptive_summary {
        println!("adaptive (modal m_hat = {})  avg MISE = {:.4}  sd = {:.4}", a.m, a.avg_mise, a.sd_mise);
    }
    Ok(())
}

pub fn cmd_experiment(args: &ExperimentArgs) -> Result<MiseReport> {
    let cfg = experiment_config(args)?;
    let out = &args.common.out;
    manifest("experiment", cfg.master_seed, out, Settings::from_experiment(&cfg))?;
    let report = run_experiment(&cfg)?;
    write_report(&report, out, true)?;
    Ok(report)
}

pub fn cmd_sweep(args: &ExperimentArgs) -> Result<MiseReport> {
    let cfg = experiment_config(args)?;
    let out = &args.common.out;
    manifest("sweep", cfg.master_seed, out, Settings::from_experiment(&cfg))?;
    let report = m_sweep(&cfg, &cfg.m_values)?;
    write_report(&report, out, false)?;
    if let Some(best) = report.summary.iter().min_by(|a, b| a.avg_mise.total_cmp(&b.avg_mise)) {
        println!("lowest avg MISE at m = {}", best.m);
    }
    Ok(report)
}
