//! Scalar equations `dX = b(X) dt + sigma dB` driven by fBM, the step-n Euler
//! scheme, and the Gaussian stationary law of the fractional Langevin equation.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::fbm::{FbmPath, HurstIndex, TimeGrid};
use crate::io;

/// Slack allowed when comparing `b'(x)` against `-m_b`.
pub const DISSIPATIVITY_SLACK: f64 = 1e-12;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A drift `b` with its derivative and the claimed constant `m_b` such that
/// `b'(x) <= -m_b` everywhere.
#[derive(Clone)]
pub struct DriftModel {
    b: RealFn,
    b_prime: RealFn,
    m_b: f64,
    label: String,
}

impl fmt::Debug for DriftModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DriftModel").field("label", &self.label).field("m_b", &self.m_b).finish()
    }
}

impl DriftModel {
    pub fn new<B, D>(label: impl Into<String>, m_b: f64, b: B, b_prime: D) -> Result<Self>
    where
        B: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(m_b > 0.0 && m_b.is_finite()) {
            return Err(Error::invalid("m_b", format!("dissipativity constant must be positive, got {m_b}")));
        }
        Ok(DriftModel { b: Arc::new(b), b_prime: Arc::new(b_prime), m_b, label: label.into() })
    }

    /// Fractional Langevin drift `b(x) = -theta x`.
    pub fn linear(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::invalid("theta", format!("theta must be positive, got {theta}")));
        }
        DriftModel::new(format!("linear(theta={theta})"), theta, move |x| -theta * x, move |_| -theta)
    }

    /// `b(x) = -theta x - alpha sin x`, dissipative with `m_b = theta - |alpha|`.
    pub fn linear_sine(theta: f64, alpha: f64) -> Result<Self> {
        if !(theta > alpha.abs()) {
            return Err(Error::invalid("alpha", format!("need theta > |alpha|, got theta={theta}, alpha={alpha}")));
        }
        DriftModel::new(
            format!("linear_sine(theta={theta},alpha={alpha})"),
            theta - alpha.abs(),
            move |x| -theta * x - alpha * x.sin(),
            move |x| -theta - alpha * x.cos(),
        )
    }

    pub fn b(&self, x: f64) -> f64 {
        (self.b)(x)
    }

    pub fn b_prime(&self, x: f64) -> f64 {
        (self.b_prime)(x)
    }

    pub fn m_b(&self) -> f64 {
        self.m_b
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipativityReport {
    pub holds: bool,
    /// Probe where `b'` is largest.
    pub argmax: f64,
    pub max_b_prime: f64,
    /// `max(0, max b' + m_b)`.
    pub violation: f64,
}

/// Probes `b'` at `n_probe` equispaced points of `[lo, hi]`.
pub fn check_dissipativity(model: &DriftModel, lo: f64, hi: f64, n_probe: usize) -> Result<DissipativityReport> {
    if !(lo < hi) {
        return Err(Error::invalid("probe_interval", format!("need lo < hi, got [{lo}, {hi}]")));
    }
    if n_probe < 2 {
        return Err(Error::invalid("n_probe", "need at least two probes"));
    }
    let step = (hi - lo) / (n_probe - 1) as f64;
    let mut argmax = lo;
    let mut max_b_prime = f64::NEG_INFINITY;
    for i in 0..n_probe {
        let x = if i == n_probe - 1 { hi } else { lo + i as f64 * step };
        let d = model.b_prime(x);
        if !d.is_finite() {
            return Err(Error::NonFinite { what: "b'", x });
        }
        if d > max_b_prime {
            max_b_prime = d;
            argmax = x;
        }
    }
    let excess = max_b_prime + model.m_b();
    Ok(DissipativityReport {
        holds: excess <= DISSIPATIVITY_SLACK,
        argmax,
        max_b_prime,
        violation: excess.max(0.0),
    })
}

/// `x + b(x) step + sigma db`.
pub fn euler_step(x: f64, model: &DriftModel, step: f64, sigma: f64, db: f64) -> Result<f64> {
    let next = x + model.b(x) * step + sigma * db;
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::NonFinite { what: "Euler iterate (drift explosion)", x })
    }
}

#[derive(Debug, Clone)]
pub struct EulerConfig {
    pub x0: f64,
    pub drift: DriftModel,
    pub sigma: f64,
    pub horizon: f64,
    pub n: usize,
    pub burn_in_fraction: f64,
}

impl EulerConfig {
    pub fn new(x0: f64, drift: DriftModel, sigma: f64, horizon: f64, n: usize) -> Result<Self> {
        let cfg = EulerConfig { x0, drift, sigma, horizon, n, burn_in_fraction: 0.0 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_burn_in(mut self, fraction: f64) -> Result<Self> {
        self.burn_in_fraction = fraction;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.x0.is_finite() {
            return Err(Error::invalid("x0", "initial condition must be finite"));
        }
        if self.sigma == 0.0 || !self.sigma.is_finite() {
            return Err(Error::invalid("sigma", "sigma must be nonzero"));
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return Err(Error::invalid("burn_in", format!("burn-in fraction must lie in [0,1), got {}", self.burn_in_fraction)));
        }
        self.grid().map(|_| ())
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::from_horizon(self.horizon, self.n)
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.n as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub x0: f64,
    pub sigma: f64,
    pub horizon: f64,
    pub n: usize,
    pub burn_in_fraction: f64,
    pub drift: String,
}

/// `(X_{t_1}, ..., X_{t_n})`; samples before the burn-in cutoff stay in the
/// record but are skipped by [`Trajectory::estimation_values`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub config: TrajectoryConfig,
    pub seed: u64,
    first_kept: usize,
}

impl Trajectory {
    pub fn from_values(grid: TimeGrid, values: Vec<f64>, config: TrajectoryConfig, seed: u64) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::invalid("trajectory", format!("{} values for a grid of {}", values.len(), grid.n())));
        }
        let cutoff = config.burn_in_fraction * config.horizon;
        let first_kept = (1..=grid.n()).take_while(|&i| grid.point(i) < cutoff).count();
        Ok(Trajectory { grid, values, config, seed, first_kept })
    }

    /// Zero-based index of the first sample used for estimation.
    pub fn first_kept(&self) -> usize {
        self.first_kept
    }

    pub fn estimation_values(&self) -> &[f64] {
        &self.values[self.first_kept..]
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        io::write_columns(path, &["t", "X"], &[&self.grid.points(), &self.values])
    }

    /// FNV-1a over the bit patterns of the values.
    pub fn fingerprint(&self) -> u64 {
        self.values.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, v| {
            v.to_bits().to_le_bytes().iter().fold(h, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
        })
    }
}

pub fn simulate_trajectory(cfg: &EulerConfig, path: &FbmPath) -> Result<Trajectory> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    if path.grid.n() != grid.n() || (path.grid.delta() - grid.delta()).abs() > 1e-12 * grid.delta() {
        return Err(Error::invalid(
            "fbm path",
            format!(
                "grid (n={}, delta={}) does not match the scheme (n={}, delta={})",
                path.grid.n(),
                path.grid.delta(),
                grid.n(),
                grid.delta()
            ),
        ));
    }
    let step = cfg.step();
    let mut x = cfg.x0;
    let mut values = Vec::with_capacity(cfg.n);
    for db in path.increments() {
        x = euler_step(x, &cfg.drift, step, cfg.sigma, db)?;
        values.push(x);
    }
    let snapshot = TrajectoryConfig {
        x0: cfg.x0,
        sigma: cfg.sigma,
        horizon: cfg.horizon,
        n: cfg.n,
        burn_in_fraction: cfg.burn_in_fraction,
        drift: cfg.drift.label().to_owned(),
    };
    Trajectory::from_values(grid, values, snapshot, path.seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FouParams {
    pub theta: f64,
    pub sigma: f64,
    pub hurst: HurstIndex,
}

impl FouParams {
    pub fn new(theta: f64, sigma: f64, hurst: HurstIndex) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::invalid("theta", format!("theta must be positive, got {theta}")));
        }
        if sigma == 0.0 || !sigma.is_finite() {
            return Err(Error::invalid("sigma", "sigma must be nonzero"));
        }
        Ok(FouParams { theta, sigma, hurst })
    }
}

/// Centered normal density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianDensity {
    pub variance: f64,
}

impl GaussianDensity {
    pub fn pdf(&self, x: f64) -> f64 {
        (-x * x / (2.0 * self.variance)).exp() / (2.0 * std::f64::consts::PI * self.variance).sqrt()
    }

    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }

    /// `int f^2 = 1 / (2 sqrt(pi v))`.
    pub fn l2_norm_sq(&self) -> f64 {
        1.0 / (2.0 * (std::f64::consts::PI * self.variance).sqrt())
    }
}

/// Stationary law of `dX = -theta X dt + sigma dB^H`: variance `sigma^2 theta^{-2H} H Gamma(2H)`.
pub fn fou_stationary_density(params: &FouParams) -> GaussianDensity {
    let h = params.hurst.value();
    let variance = params.sigma.powi(2) * params.theta.powf(-2.0 * h) * h * gamma(2.0 * h);
    GaussianDensity { variance }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::{FbmGenerator, HurstIndex};
    use approx::assert_relative_eq;

    fn zero_path(n: usize, delta: f64) -> FbmPath {
        FbmPath {
            grid: TimeGrid::new(n, delta).unwrap(),
            values: vec![0.0; n],
            hurst: HurstIndex::new(0.5).unwrap(),
            seed: 0,
        }
    }

    #[test]
    fn dissipativity_linear() {
        let m = DriftModel::linear(10.0).unwrap();
        let r = check_dissipativity(&m, -3.0, 3.0, 11).unwrap();
        assert!(r.holds);
        assert_eq!(r.violation, 0.0);

        let over = DriftModel::new("over", 10.5, |x| -10.0 * x, |_| -10.0).unwrap();
        let r = check_dissipativity(&over, -3.0, 3.0, 11).unwrap();
        assert!(!r.holds);
        assert_relative_eq!(r.violation, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn dissipativity_detects_flat_derivative() {
        let m = DriftModel::new("x+sin", 0.1, |x: f64| -x - x.sin(), |x: f64| -1.0 - x.cos()).unwrap();
        let r = check_dissipativity(&m, -10.0, 10.0, 20_001).unwrap();
        assert!(!r.holds);
        // b' = 0 at odd multiples of pi.
        assert!(r.max_b_prime > -1e-6);
        assert_relative_eq!((r.argmax.abs() / std::f64::consts::PI).round() % 2.0, 1.0);
    }

    #[test]
    fn dissipativity_rejects_nonfinite() {
        let m = DriftModel::new("bad", 1.0, |x| -x, |x: f64| if x > 0.5 { f64::NAN } else { -1.0 }).unwrap();
        assert!(matches!(check_dissipativity(&m, 0.0, 1.0, 5), Err(Error::NonFinite { x, .. }) if x == 0.75));
        assert!(check_dissipativity(&m, 1.0, 0.0, 5).is_err());
        assert!(check_dissipativity(&m, 0.0, 1.0, 1).is_err());
    }

    #[test]
    fn linear_sine_constant() {
        let m = DriftModel::linear_sine(2.0, 0.5).unwrap();
        assert!(check_dissipativity(&m, -20.0, 20.0, 4001).unwrap().holds);
        assert!(DriftModel::linear_sine(0.5, 0.5).is_err());
    }

    #[test]
    fn euler_step_examples() {
        let lin = DriftModel::linear(10.0).unwrap();
        assert_eq!(euler_step(5.0, &lin, 0.1, 0.25, 0.0).unwrap(), 0.0);
        assert_eq!(euler_step(0.0, &lin, 0.1, 0.25, 1.0).unwrap(), 0.25);
        assert_relative_eq!(euler_step(1.0, &lin, 0.1, 0.25, -0.2).unwrap(), -0.05, epsilon = 1e-15);
        let blow = DriftModel::new("blow", 1.0, |x: f64| -x.powi(3), |x: f64| -3.0 * x * x).unwrap();
        assert!(euler_step(1e120, &blow, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn config_validation() {
        let lin = DriftModel::linear(10.0).unwrap();
        let e = EulerConfig::new(5.0, lin.clone(), 0.0, 100.0, 1000).unwrap_err();
        assert!(e.to_string().contains("sigma must be nonzero"));
        assert!(EulerConfig::new(5.0, lin.clone(), 0.25, -1.0, 1000).is_err());
        assert!(EulerConfig::new(5.0, lin.clone(), 0.25, 1.0, 10).unwrap().with_burn_in(1.0).is_err());
        assert!(DriftModel::linear(0.0).is_err());
    }

    #[test]
    fn single_step_trajectory() {
        let lin = DriftModel::linear(2.0).unwrap();
        let cfg = EulerConfig::new(1.0, lin.clone(), 0.25, 0.1, 1).unwrap();
        let mut path = zero_path(1, 0.1);
        path.values[0] = 0.3;
        let tr = simulate_trajectory(&cfg, &path).unwrap();
        assert_eq!(tr.values, vec![euler_step(1.0, &lin, 0.1, 0.25, 0.3).unwrap()]);
    }

    #[test]
    fn zero_noise_geometric_decay() {
        // theta * T / n = 0.5
        let cfg = EulerConfig::new(5.0, DriftModel::linear(5.0).unwrap(), 0.25, 1.0, 10).unwrap();
        let tr = simulate_trajectory(&cfg, &zero_path(10, 0.1)).unwrap();
        assert_eq!(tr.values[2], 0.625);
        for (k, v) in tr.values.iter().enumerate() {
            assert_eq!(*v, 5.0 * 0.5f64.powi(k as i32 + 1));
        }
        assert!(tr.values.windows(2).all(|w| w[1].abs() < w[0].abs()));
    }

    #[test]
    fn grid_mismatch_rejected() {
        let cfg = EulerConfig::new(5.0, DriftModel::linear(5.0).unwrap(), 0.25, 1.0, 10).unwrap();
        assert!(simulate_trajectory(&cfg, &zero_path(10, 0.2)).is_err());
        assert!(simulate_trajectory(&cfg, &zero_path(9, 0.1)).is_err());
    }

    #[test]
    fn burn_in_flags_but_keeps_samples() {
        let cfg = EulerConfig::new(5.0, DriftModel::linear(5.0).unwrap(), 0.25, 1.0, 10)
            .unwrap()
            .with_burn_in(0.25)
            .unwrap();
        let tr = simulate_trajectory(&cfg, &zero_path(10, 0.1)).unwrap();
        assert_eq!(tr.values.len(), 10);
        // t = 0.1, 0.2 are below the 0.25 cutoff.
        assert_eq!(tr.first_kept(), 2);
        assert_eq!(tr.estimation_values().len(), 8);
    }

    #[test]
    fn paper_config_settles_near_zero() {
        let h = HurstIndex::new(0.5).unwrap();
        let cfg = EulerConfig::new(5.0, DriftModel::linear(10.0).unwrap(), 0.25, 100.0, 1000).unwrap();
        let gen = FbmGenerator::new(cfg.grid().unwrap(), h).unwrap();
        for seed in 0..10 {
            let tr = simulate_trajectory(&cfg, &gen.sample(seed)).unwrap();
            assert!(tr.values[3..].iter().all(|x| x.abs() <= 1.0), "seed {seed}");
        }
    }

    #[test]
    fn unit_contraction_step_reduces_to_scaled_increments() {
        // theta T / n = 1: X_k = sigma (B_{t_k} - B_{t_{k-1}}), so the sample variance is sigma^2 delta.
        let h = HurstIndex::new(0.5).unwrap();
        let cfg = EulerConfig::new(5.0, DriftModel::linear(10.0).unwrap(), 0.25, 100.0, 1000).unwrap();
        let gen = FbmGenerator::new(cfg.grid().unwrap(), h).unwrap();
        let mut var = 0.0;
        for seed in 0..20 {
            let path = gen.sample(seed);
            let tr = simulate_trajectory(&cfg, &path).unwrap();
            for (x, db) in tr.values.iter().zip(path.increments()) {
                assert!((x - 0.25 * db).abs() < 1e-12);
            }
            var += tr.values.iter().map(|x| x * x).sum::<f64>() / 1000.0;
        }
        let var = var / 20.0;
        assert!((var / 0.00625 - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn fou_density_examples() {
        let p = FouParams::new(10.0, 0.25, HurstIndex::new(0.5).unwrap()).unwrap();
        let d = fou_stationary_density(&p);
        assert_relative_eq!(d.variance, 0.003125, epsilon = 1e-15);
        assert_relative_eq!(d.variance, 0.25f64.powi(2) / 20.0, epsilon = 1e-15);
        assert_relative_eq!(d.sd(), 0.055902, epsilon = 1e-6);

        let p = FouParams::new(1.0, 1.0, HurstIndex::new(0.5).unwrap()).unwrap();
        let d = fou_stationary_density(&p);
        assert_relative_eq!(d.variance, 0.5, epsilon = 1e-15);
        assert_relative_eq!(d.pdf(0.0), 0.564190, epsilon = 1e-6);
        assert_eq!(d.pdf(0.3), d.pdf(-0.3));
        assert!(d.pdf(0.0) > d.pdf(1e-3));
    }

    #[test]
    fn fou_density_integrates_to_one() {
        for &h in &[0.3, 0.5, 0.7] {
            let p = FouParams::new(10.0, 0.25, HurstIndex::new(h).unwrap()).unwrap();
            let d = fou_stationary_density(&p);
            let half = 12.0 * d.sd();
            let n = 20_000;
            let dx = 2.0 * half / n as f64;
            let mass: f64 = (0..=n)
                .map(|i| {
                    let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                    w * d.pdf(-half + i as f64 * dx)
                })
                .sum::<f64>()
                * dx;
            assert_relative_eq!(mass, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn fingerprint_tracks_values() {
        let cfg = EulerConfig::new(5.0, DriftModel::linear(5.0).unwrap(), 0.25, 1.0, 10).unwrap();
        let a = simulate_trajectory(&cfg, &zero_path(10, 0.1)).unwrap();
        let mut b = a.clone();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.values[4] = f64::from_bits(b.values[4].to_bits() + 1);
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
