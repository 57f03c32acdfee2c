//! Monte Carlo MISE harness for the fractional Langevin equation.
//!
//! Every replicate draws one fBM path from a shared generator, runs the Euler
//! scheme from `x0`, estimates the density for each requested dimension (and
//! optionally the penalized one) and integrates the squared error against the
//! closed-form stationary density. All dimensions of one run share the same
//! trajectories.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::basis::{BasisSpec, IntervalSupport};
use crate::error::{Error, Result};
use crate::estimator::{estimate_coefficients, ProjectionEstimate, Sample};
use crate::fbm::{FbmGenerator, HurstIndex};
use crate::io::{self, fmt_f64};
use crate::parallel::{map_indexed, replicate_seed, Execution};
use crate::quadrature::trapezoid;
use crate::sde::{fou_stationary_density, simulate_trajectory, DriftModel, EulerConfig, FouParams, GaussianDensity};
use crate::selection::{select_model, PenaltyConfig, DEFAULT_KAPPA};

/// Points `mid + half * j / N`, `j = -N..=N`, on the support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalGrid {
    pub support: IntervalSupport,
    pub half_points: usize,
}

impl EvalGrid {
    pub fn new(support: IntervalSupport, half_points: usize) -> Result<Self> {
        if half_points == 0 {
            return Err(Error::invalid("N", "evaluation grid needs N >= 1"));
        }
        Ok(EvalGrid { support, half_points })
    }

    pub fn points(&self) -> Vec<f64> {
        let mid = 0.5 * (self.support.a() + self.support.b());
        let half = 0.5 * self.support.len();
        let n = self.half_points as i64;
        (-n..=n).map(|j| mid + half * (j as f64 / n as f64)).collect()
    }
}

/// Trapezoid approximation of `int (f_hat - f)^2` over the grid nodes.
pub fn riemann_ise<F: Fn(f64) -> f64>(estimate: &ProjectionEstimate, truth: F, xs: &[f64]) -> f64 {
    assert!(xs.len() >= 2, "ISE needs at least two grid points");
    let sq: Vec<f64> = xs.iter().map(|&x| (estimate.eval(x) - truth(x)).powi(2)).collect();
    trapezoid(xs, &sq)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveSettings {
    pub kappa: f64,
    pub m_override: Option<usize>,
}

impl Default for AdaptiveSettings {
    fn default() -> Self {
        AdaptiveSettings { kappa: DEFAULT_KAPPA, m_override: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub x0: f64,
    pub theta: f64,
    pub sigma: f64,
    pub horizon: f64,
    pub n: usize,
    pub hurst: HurstIndex,
    pub burn_in_fraction: f64,
    pub support: IntervalSupport,
    pub m_values: Vec<usize>,
    pub adaptive: Option<AdaptiveSettings>,
    pub grid_half_points: usize,
    pub replications: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub execution: Execution,
}

impl ExperimentConfig {
    /// Settings behind the two published figures: `1` is H = 0.5 with m = 30,
    /// `2` is H = 0.7 with m = 35. Both use x0 = 5, theta = 10, sigma = 0.25,
    /// T = 100, n = 1000, ten datasets and the grid `{j/70}` on `[-1, 1]`.
    pub fn paper_figure(figure: u8) -> Result<Self> {
        let (h, m) = match figure {
            1 => (0.5, 30),
            2 => (0.7, 35),
            other => return Err(Error::invalid("paper_figure", format!("unknown figure {other}; expected 1 or 2"))),
        };
        Ok(ExperimentConfig {
            x0: 5.0,
            theta: 10.0,
            sigma: 0.25,
            horizon: 100.0,
            n: 1000,
            hurst: HurstIndex::new(h)?,
            burn_in_fraction: 0.0,
            support: IntervalSupport::new(-1.0, 1.0)?,
            m_values: vec![m],
            adaptive: None,
            grid_half_points: 70,
            replications: 10,
            master_seed: 20_210_101 + figure as u64,
            execution: Execution::Parallel,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::invalid("R", "replication count must be at least 1"));
        }
        if self.m_values.is_empty() && self.adaptive.is_none() {
            return Err(Error::invalid("m", "give at least one dimension or enable adaptive selection"));
        }
        if self.m_values.contains(&0) {
            return Err(Error::invalid("m", "dimensions start at 1"));
        }
        if let Some(a) = &self.adaptive {
            if !(a.kappa >= 0.0 && a.kappa.is_finite()) {
                return Err(Error::invalid("kappa", format!("penalty constant must be nonnegative, got {}", a.kappa)));
            }
        }
        FouParams::new(self.theta, self.sigma, self.hurst)?;
        EvalGrid::new(self.support, self.grid_half_points)?;
        self.euler_config().map(|_| ())
    }

    pub fn euler_config(&self) -> Result<EulerConfig> {
        EulerConfig::new(self.x0, DriftModel::linear(self.theta)?, self.sigma, self.horizon, self.n)?
            .with_burn_in(self.burn_in_fraction)
    }

    pub fn truth(&self) -> Result<GaussianDensity> {
        Ok(fou_stationary_density(&FouParams::new(self.theta, self.sigma, self.hurst)?))
    }

    pub fn eval_grid(&self) -> Result<EvalGrid> {
        EvalGrid::new(self.support, self.grid_half_points)
    }

    /// Largest dimension any replicate may need.
    pub fn m_max(&self) -> usize {
        let fixed = self.m_values.iter().copied().max().unwrap_or(1);
        let adaptive = self
            .adaptive
            .map(|a| a.m_override.unwrap_or(crate::DEFAULT_M_MAX))
            .unwrap_or(1);
        fixed.max(adaptive)
    }

    pub fn basis(&self) -> Result<BasisSpec> {
        BasisSpec::trigonometric(self.support, self.m_max())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub index: usize,
    pub seed: u64,
    pub trajectory_fingerprint: u64,
    /// Aligned with `ExperimentConfig::m_values`.
    pub ise: Vec<f64>,
    /// `(m_hat, ise)` when adaptive selection is on.
    pub adaptive: Option<(usize, f64)>,
    #[serde(skip)]
    pub estimate: Option<ProjectionEstimate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiseSummary {
    pub m: usize,
    pub avg_mise: f64,
    pub sd_mise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiseReport {
    pub config: ExperimentConfig,
    pub replicates: Vec<ReplicateRecord>,
    pub summary: Vec<MiseSummary>,
    /// Averages of the adaptive estimator; `m` holds the modal `m_hat`.
    pub adaptive_summary: Option<MiseSummary>,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl MiseReport {
    pub fn avg_mise(&self, m: usize) -> Option<f64> {
        self.summary.iter().find(|s| s.m == m).map(|s| s.avg_mise)
    }

    /// ISE values of dimension `m` across replicates.
    pub fn ise_column(&self, m: usize) -> Option<Vec<f64>> {
        let k = self.config.m_values.iter().position(|&v| v == m)?;
        Some(self.replicates.iter().map(|r| r.ise[k]).collect())
    }

    pub fn write_report_csv(&self, path: &Path) -> Result<()> {
        let ms = &self.config.m_values;
        io::write_rows(
            path,
            &["replicate", "m", "ise"],
            self.replicates.iter().flat_map(|r| {
                ms.iter().zip(&r.ise).map(move |(m, e)| vec![(r.index + 1).to_string(), m.to_string(), fmt_f64(*e)])
            }),
        )
    }

    pub fn write_summary_csv(&self, path: &Path) -> Result<()> {
        io::write_rows(
            path,
            &["m", "avg_mise", "sd_mise"],
            self.summary.iter().map(|s| vec![s.m.to_string(), fmt_f64(s.avg_mise), fmt_f64(s.sd_mise)]),
        )
    }

    pub fn write_adaptive_csv(&self, path: &Path) -> Result<()> {
        io::write_rows(
            path,
            &["replicate", "m_hat", "ise"],
            self.replicates
                .iter()
                .filter_map(|r| r.adaptive.map(|(m, e)| vec![(r.index + 1).to_string(), m.to_string(), fmt_f64(e)])),
        )
    }

    /// `x, f_true, f_hat_rep1, ..., f_hat_repR` for dimension `m` on the evaluation grid.
    pub fn write_plot_csv(&self, path: &Path, m: usize) -> Result<()> {
        let xs = self.config.eval_grid()?.points();
        let truth = self.config.truth()?;
        let f_true: Vec<f64> = xs.iter().map(|&x| truth.pdf(x)).collect();
        let mut columns: Vec<Vec<f64>> = vec![xs.clone(), f_true];
        let mut headers = vec!["x".to_owned(), "f_true".to_owned()];
        for r in &self.replicates {
            let est = r
                .estimate
                .as_ref()
                .ok_or_else(|| Error::invalid("plot", "replicate estimates were not retained"))?
                .truncate(m)?;
            headers.push(format!("f_hat_rep{}", r.index + 1));
            columns.push(xs.iter().map(|&x| est.eval(x)).collect());
        }
        let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
        let col_refs: Vec<&[f64]> = columns.iter().map(Vec::as_slice).collect();
        io::write_columns(path, &header_refs, &col_refs)
    }
}

/// Most frequent selected dimension, smallest on ties.
fn modal_m_hat(replicates: &[ReplicateRecord]) -> usize {
    let mut counts = std::collections::BTreeMap::new();
    for m in replicates.iter().filter_map(|r| r.adaptive.map(|a| a.0)) {
        *counts.entry(m).or_insert(0usize) += 1;
    }
    counts.iter().rev().max_by_key(|(_, &c)| c).map_or(0, |(&m, _)| m)
}

fn stage<T>(r: Result<T>, replicate: usize, seed: u64, stage: &'static str) -> Result<T> {
    r.map_err(|e| Error::Replicate { replicate, seed, stage, source: Box::new(e) })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MiseReport> {
    cfg.validate()?;
    let euler = cfg.euler_config()?;
    let grid = euler.grid()?;
    let generator = FbmGenerator::new(grid, cfg.hurst)?;
    let spec = cfg.basis()?;
    let truth = cfg.truth()?;
    let xs = cfg.eval_grid()?.points();
    let m_fixed = cfg.m_values.iter().copied().max();

    let outcomes = map_indexed(cfg.replications, cfg.execution, |i| -> Result<ReplicateRecord> {
        let seed = replicate_seed(cfg.master_seed, i as u64);
        let path = generator.sample(seed);
        let traj = stage(simulate_trajectory(&euler, &path), i, seed, "euler scheme")?;
        let sample = stage(Sample::from_trajectory(&traj), i, seed, "sampling")?;
        let mut ise = Vec::with_capacity(cfg.m_values.len());
        let mut estimate = None;
        if let Some(m_top) = m_fixed {
            let full = stage(estimate_coefficients(&sample, &spec, m_top), i, seed, "estimation")?;
            for &m in &cfg.m_values {
                let est = stage(full.truncate(m), i, seed, "estimation")?;
                ise.push(riemann_ise(&est, |x| truth.pdf(x), &xs));
            }
            estimate = Some(full);
        }
        let adaptive = match cfg.adaptive {
            Some(a) => {
                let pen = stage(PenaltyConfig::for_sample(&sample, cfg.hurst, a.kappa), i, seed, "selection")?
                    .with_override(a.m_override);
                let sel = stage(select_model(&sample, &spec, &pen), i, seed, "selection")?;
                Some((sel.m_hat, riemann_ise(&sel.estimate(), |x| truth.pdf(x), &xs)))
            }
            None => None,
        };
        Ok(ReplicateRecord { index: i, seed, trajectory_fingerprint: traj.fingerprint(), ise, adaptive, estimate })
    });
    let replicates = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let summary = cfg
        .m_values
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            let col: Vec<f64> = replicates.iter().map(|r| r.ise[k]).collect();
            let (avg_mise, sd_mise) = mean_sd(&col);
            MiseSummary { m, avg_mise, sd_mise }
        })
        .collect();
    let adaptive_summary = cfg.adaptive.map(|_| {
        let col: Vec<f64> = replicates.iter().filter_map(|r| r.adaptive.map(|a| a.1)).collect();
        let (avg_mise, sd_mise) = mean_sd(&col);
        MiseSummary { m: modal_m_hat(&replicates), avg_mise, sd_mise }
    });
    Ok(MiseReport { config: cfg.clone(), replicates, summary, adaptive_summary })
}

/// Runs the same replicates once for every dimension in `m_values`.
pub fn m_sweep(cfg: &ExperimentConfig, m_values: &[usize]) -> Result<MiseReport> {
    let mut cfg = cfg.clone();
    cfg.m_values = m_values.to_vec();
    run_experiment(&cfg)
}
