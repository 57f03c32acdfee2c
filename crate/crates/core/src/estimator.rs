//! Projection estimator `f_m = sum_j theta_j phi_j` with empirical
//! coefficients `theta_j = (1/n) sum_i phi_j(X_{t_i})`, and the least-squares
//! contrast it minimizes over the span of the first `m` basis functions.

use std::path::Path;

use crate::basis::BasisSpec;
use crate::error::{Error, Result};
use crate::io::{self, fmt_f64};
use crate::sde::Trajectory;

/// Observations used for estimation, after any burn-in filtering.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    delta: f64,
    n_nominal: usize,
}

impl Sample {
    pub fn new(values: Vec<f64>, delta: f64, n_nominal: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("sample", "no observations left for estimation"));
        }
        if let Some(&x) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "sample value", x });
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::invalid("delta", format!("sampling step must be positive, got {delta}")));
        }
        Ok(Sample { values, delta, n_nominal })
    }

    /// Independent observations; the time step is taken as 1 so that `n delta = n`.
    pub fn iid(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Sample::new(values, 1.0, n)
    }

    pub fn from_trajectory(tr: &Trajectory) -> Result<Self> {
        Sample::new(tr.estimation_values().to_vec(), tr.grid.delta(), tr.grid.n())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_effective(&self) -> usize {
        self.values.len()
    }

    pub fn n_nominal(&self) -> usize {
        self.n_nominal
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `n_effective * delta`, the observed time span.
    pub fn span(&self) -> f64 {
        self.n_effective() as f64 * self.delta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionEstimate {
    pub spec: BasisSpec,
    pub theta_hat: Vec<f64>,
    pub n_effective: usize,
    pub delta: f64,
}

impl ProjectionEstimate {
    pub fn m(&self) -> usize {
        self.theta_hat.len()
    }

    /// `f_m(x)`; zero outside the support. No clipping is applied.
    pub fn eval(&self, x: f64) -> f64 {
        if !self.spec.support.contains(x) {
            return 0.0;
        }
        self.theta_hat
            .iter()
            .enumerate()
            .map(|(j, t)| t * self.spec.eval_unchecked(j + 1, x))
            .sum()
    }

    /// `||f_m||^2 = sum_j theta_j^2` by orthonormality.
    pub fn norm_sq(&self) -> f64 {
        self.theta_hat.iter().map(|t| t * t).sum()
    }

    /// The estimate in the smaller model `m' <= m`; identical to re-estimating.
    pub fn truncate(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.m() {
            return Err(Error::invalid("m", format!("cannot truncate dimension {} to {m}", self.m())));
        }
        Ok(ProjectionEstimate { theta_hat: self.theta_hat[..m].to_vec(), ..self.clone() })
    }

    pub fn write_coefficients_csv(&self, path: &Path) -> Result<()> {
        io::write_rows(
            path,
            &["j", "theta_hat"],
            self.theta_hat.iter().enumerate().map(|(j, t)| vec![(j + 1).to_string(), fmt_f64(*t)]),
        )
    }

    pub fn write_grid_csv(&self, path: &Path, xs: &[f64]) -> Result<()> {
        let fx: Vec<f64> = xs.iter().map(|&x| self.eval(x)).collect();
        io::write_columns(path, &["x", "f_hat"], &[xs, &fx])
    }
}

/// `theta_j = (1/n) sum_i phi_j(X_i)` for `j = 1..=m`, summed in sample order.
pub fn estimate_coefficients(sample: &Sample, spec: &BasisSpec, m: usize) -> Result<ProjectionEstimate> {
    if m == 0 || m > spec.m_max {
        return Err(Error::invalid("m", format!("dimension {m} outside 1..={}", spec.m_max)));
    }
    let mut sums = vec![0.0; m];
    let mut phi = vec![0.0; m];
    for &x in sample.values() {
        spec.eval_all(x, &mut phi);
        for (s, p) in sums.iter_mut().zip(&phi) {
            *s += p;
        }
    }
    let n = sample.n_effective() as f64;
    Ok(ProjectionEstimate {
        spec: *spec,
        theta_hat: sums.into_iter().map(|s| s / n).collect(),
        n_effective: sample.n_effective(),
        delta: sample.delta(),
    })
}

/// `gamma_n(g) = ||g||^2 - (2/n) sum_i g(X_i)` for `g = sum_j theta_j phi_j`.
pub fn contrast(sample: &Sample, spec: &BasisSpec, theta: &[f64]) -> Result<f64> {
    if theta.is_empty() || theta.len() > spec.m_max {
        return Err(Error::invalid("theta", format!("{} coefficients for m_max = {}", theta.len(), spec.m_max)));
    }
    let g = ProjectionEstimate { spec: *spec, theta_hat: theta.to_vec(), n_effective: 0, delta: 1.0 };
    let fit: f64 = sample.values().iter().map(|&x| g.eval(x)).sum();
    Ok(g.norm_sq() - 2.0 * fit / sample.n_effective() as f64)
}

/// `nu_n(phi_j) = theta_j - <phi_j, f>` where the true mean is supplied by the caller.
pub fn empirical_process(sample: &Sample, spec: &BasisSpec, j: usize, true_mean: f64) -> Result<f64> {
    let est = estimate_coefficients(sample, spec, j)?;
    Ok(est.theta_hat[j - 1] - true_mean)
}

/// Plot-only post-processing: clip at zero, then rescale so the trapezoid
/// integral over `xs` is one. Never used for risk computations.
pub fn clipped_renormalized(est: &ProjectionEstimate, xs: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = xs.iter().map(|&x| est.eval(x).max(0.0)).collect();
    let mass = crate::quadrature::trapezoid(xs, &clipped);
    if mass > 0.0 {
        clipped.into_iter().map(|v| v / mass).collect()
    } else {
        clipped
    }
}
