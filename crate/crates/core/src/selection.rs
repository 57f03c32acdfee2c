//! Penalized choice of the projection dimension.
//!
//! `m_hat = argmin_{m in M} { gamma_n(f_m) + pen(m) }` with
//! `pen(m) = kappa (m + 1) L(m) / (n delta)^{b_H}` and the proposal set
//! `M = { m : m L(m) <= (n delta)^{b_H} }`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::error::{Error, Result};
use crate::estimator::{estimate_coefficients, ProjectionEstimate, Sample};
use crate::fbm::HurstIndex;
use crate::io::{self, fmt_f64};

pub const DEFAULT_KAPPA: f64 = 2.0;

/// `(a_H, b_H) = (max(2H, 1), min(1, 2 - 2H))`.
pub fn rate_exponents(h: HurstIndex) -> (f64, f64) {
    let h = h.value();
    ((2.0 * h).max(1.0), (2.0 - 2.0 * h).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub kappa: f64,
    pub hurst: HurstIndex,
    pub n_effective: usize,
    pub delta: f64,
    pub m_override: Option<usize>,
}

impl PenaltyConfig {
    pub fn new(kappa: f64, hurst: HurstIndex, n_effective: usize, delta: f64) -> Result<Self> {
        // kappa = 0 is accepted: it turns the criterion into the bare contrast.
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::invalid("kappa", format!("penalty constant must be finite and nonnegative, got {kappa}")));
        }
        if n_effective == 0 || !(delta > 0.0) {
            return Err(Error::invalid("n*delta", "observed span must be positive"));
        }
        Ok(PenaltyConfig { kappa, hurst, n_effective, delta, m_override: None })
    }

    pub fn for_sample(sample: &Sample, hurst: HurstIndex, kappa: f64) -> Result<Self> {
        PenaltyConfig::new(kappa, hurst, sample.n_effective(), sample.delta())
    }

    pub fn with_override(mut self, m_max: Option<usize>) -> Self {
        self.m_override = m_max;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn a_h(&self) -> f64 {
        rate_exponents(self.hurst).0
    }

    pub fn b_h(&self) -> f64 {
        rate_exponents(self.hurst).1
    }

    /// `(n delta)^{b_H}`.
    pub fn threshold(&self) -> f64 {
        (self.n_effective as f64 * self.delta).powf(self.b_h())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalSet {
    pub members: Vec<usize>,
    /// False when an explicit override replaced the theoretical set.
    pub theoretical: bool,
    pub threshold: f64,
}

impl ProposalSet {
    pub fn contains(&self, m: usize) -> bool {
        self.members.contains(&m)
    }

    pub fn max(&self) -> usize {
        *self.members.last().expect("proposal sets are never empty")
    }
}

pub fn proposal_set(spec: &BasisSpec, cfg: &PenaltyConfig) -> Result<ProposalSet> {
    let threshold = cfg.threshold();
    if let Some(cap) = cfg.m_override {
        if cap == 0 || cap > spec.m_max {
            return Err(Error::invalid("m_override", format!("override {cap} outside 1..={}", spec.m_max)));
        }
        return Ok(ProposalSet { members: (1..=cap).collect(), theoretical: false, threshold });
    }
    let mut members = Vec::new();
    for m in 1..=spec.m_max {
        if m as f64 * spec.lipschitz_budget(m)? <= threshold {
            members.push(m);
        }
    }
    if members.is_empty() {
        return Err(Error::EmptyProposalSet { threshold });
    }
    Ok(ProposalSet { members, theoretical: true, threshold })
}

pub fn penalty(m: usize, spec: &BasisSpec, cfg: &PenaltyConfig) -> Result<f64> {
    Ok(cfg.kappa * (m + 1) as f64 * spec.lipschitz_budget(m)? / cfg.threshold())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    pub m: usize,
    /// `gamma_n(f_m) = -sum_{j <= m} theta_j^2`.
    pub contrast: f64,
    pub pen: f64,
    pub criterion: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub m_hat: usize,
    pub table: Vec<SelectionRow>,
    pub proposal: ProposalSet,
    /// Estimate in the largest model of the proposal set; truncate for any `m`.
    pub full_estimate: ProjectionEstimate,
}

impl SelectionResult {
    pub fn estimate(&self) -> ProjectionEstimate {
        self.full_estimate.truncate(self.m_hat).expect("m_hat lies in the proposal set")
    }

    pub fn row(&self, m: usize) -> Option<&SelectionRow> {
        self.table.iter().find(|r| r.m == m)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        io::write_rows(
            path,
            &["m", "contrast", "pen", "criterion", "selected"],
            self.table.iter().map(|r| {
                vec![
                    r.m.to_string(),
                    fmt_f64(r.contrast),
                    fmt_f64(r.pen),
                    fmt_f64(r.criterion),
                    u8::from(r.m == self.m_hat).to_string(),
                ]
            }),
        )
    }
}

/// Evaluates the criterion on every model of the proposal set; ties go to the smallest `m`.
pub fn select_model(sample: &Sample, spec: &BasisSpec, cfg: &PenaltyConfig) -> Result<SelectionResult> {
    let proposal = proposal_set(spec, cfg)?;
    let full_estimate = estimate_coefficients(sample, spec, proposal.max())?;
    let mut table = Vec::with_capacity(proposal.members.len());
    for &m in &proposal.members {
        let contrast = -full_estimate.theta_hat[..m].iter().map(|t| t * t).sum::<f64>();
        let pen = penalty(m, spec, cfg)?;
        table.push(SelectionRow { m, contrast, pen, criterion: contrast + pen });
    }
    let m_hat = table
        .iter()
        .fold(None::<&SelectionRow>, |best, r| match best {
            Some(b) if b.criterion <= r.criterion => Some(b),
            _ => Some(r),
        })
        .map(|r| r.m)
        .expect("nonempty table");
    Ok(SelectionResult { m_hat, table, proposal, full_estimate })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaCalibration {
    /// `(kappa, m_hat)` in the order supplied.
    pub points: Vec<(f64, usize)>,
    /// Longest run of consecutive kappas sharing one `m_hat`: `(m_hat, kappa_lo, kappa_hi)`.
    pub plateau: (usize, f64, f64),
}

/// Reruns the selection over a grid of penalty constants and reports where `m_hat` is stable.
pub fn calibrate_kappa(sample: &Sample, spec: &BasisSpec, cfg: &PenaltyConfig, kappas: &[f64]) -> Result<KappaCalibration> {
    if kappas.is_empty() {
        return Err(Error::invalid("kappa_grid", "need at least one value"));
    }
    let mut points = Vec::with_capacity(kappas.len());
    for &k in kappas {
        let c = PenaltyConfig::new(k, cfg.hurst, cfg.n_effective, cfg.delta)?.with_override(cfg.m_override);
        points.push((k, select_model(sample, spec, &c)?.m_hat));
    }
    let mut best = (0usize, 0usize);
    let mut start = 0;
    for i in 1..=points.len() {
        if i == points.len() || points[i].1 != points[start].1 {
            if i - start > best.1 - best.0 {
                best = (start, i);
            }
            start = i;
        }
    }
    let plateau = (points[best.0].1, points[best.0].0, points[best.1 - 1].0);
    Ok(KappaCalibration { points, plateau })
}
