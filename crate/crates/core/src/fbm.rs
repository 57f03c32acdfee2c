//! Exact sampling of fractional Brownian motion on a uniform grid.
//!
//! Paths are drawn as `L z` where `L` is the lower Cholesky factor of the
//! covariance matrix `[R(t_i, t_j)]` and `z` a vector of independent standard
//! normals. The factor is computed once per `(grid, H)` and shared across paths.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

/// Relative diagonal jitter applied once when the plain factorization fails.
pub const CHOLESKY_JITTER: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct HurstIndex(f64);

impl HurstIndex {
    pub fn new(h: f64) -> Result<Self> {
        if h > 0.0 && h < 1.0 {
            Ok(HurstIndex(h))
        } else {
            Err(Error::invalid("H", format!("H must lie in (0,1), got {h}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for HurstIndex {
    type Error = Error;
    fn try_from(h: f64) -> Result<Self> {
        HurstIndex::new(h)
    }
}

impl From<HurstIndex> for f64 {
    fn from(h: HurstIndex) -> f64 {
        h.0
    }
}

/// Uniform grid `t_i = i * delta`, `i = 1..=n`. The origin is implicit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    n: usize,
    delta: f64,
}

impl TimeGrid {
    pub fn new(n: usize, delta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "grid needs at least one point"));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::invalid("delta", format!("time step must be positive, got {delta}")));
        }
        Ok(TimeGrid { n, delta })
    }

    /// Grid of `n` steps covering `[0, horizon]`.
    pub fn from_horizon(horizon: f64, n: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid("T", format!("horizon must be positive, got {horizon}")));
        }
        if n == 0 {
            return Err(Error::invalid("n", "grid needs at least one point"));
        }
        TimeGrid::new(n, horizon / n as f64)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `t_i` for `i` in `1..=n`.
    pub fn point(&self, i: usize) -> f64 {
        i as f64 * self.delta
    }

    pub fn points(&self) -> Vec<f64> {
        (1..=self.n).map(|i| self.point(i)).collect()
    }

    pub fn horizon(&self) -> f64 {
        self.point(self.n)
    }
}

/// `R(s, t) = (s^{2H} + t^{2H} - |t - s|^{2H}) / 2`.
pub fn fbm_covariance(s: f64, t: f64, h: HurstIndex) -> f64 {
    let two_h = 2.0 * h.value();
    0.5 * (s.powf(two_h) + t.powf(two_h) - (t - s).abs().powf(two_h))
}

pub fn covariance_matrix(grid: &TimeGrid, h: HurstIndex) -> DMatrix<f64> {
    let t = grid.points();
    DMatrix::from_fn(grid.n(), grid.n(), |i, j| fbm_covariance(t[i], t[j], h))
}

/// Smallest and largest eigenvalue of the unjittered covariance matrix.
pub fn covariance_eigen_bounds(grid: &TimeGrid, h: HurstIndex) -> (f64, f64) {
    let eig = SymmetricEigen::new(covariance_matrix(grid, h));
    eig.eigenvalues
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Draws fBM paths for a fixed grid and Hurst index.
///
/// Cloning is cheap; the factor is reference counted and read-only, so one
/// generator can feed any number of threads.
#[derive(Debug, Clone)]
pub struct FbmGenerator {
    grid: TimeGrid,
    hurst: HurstIndex,
    // Row-major packed lower triangle: row i occupies [i(i+1)/2, i(i+1)/2 + i].
    factor: Arc<Vec<f64>>,
    jittered: bool,
}

impl FbmGenerator {
    pub fn new(grid: TimeGrid, hurst: HurstIndex) -> Result<Self> {
        let cov = covariance_matrix(&grid, hurst);
        let (lower, jittered) = match nalgebra::linalg::Cholesky::new(cov.clone()) {
            Some(chol) => (chol.unpack(), false),
            None => {
                let max_diag = cov.diagonal().max();
                let mut jittered = cov;
                for i in 0..grid.n() {
                    jittered[(i, i)] += CHOLESKY_JITTER * max_diag;
                }
                let chol = nalgebra::linalg::Cholesky::new(jittered)
                    .ok_or(Error::Factorization { n: grid.n(), hurst: hurst.value() })?;
                (chol.unpack(), true)
            }
        };
        let n = grid.n();
        let mut packed = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for k in 0..=i {
                packed.push(lower[(i, k)]);
            }
        }
        Ok(FbmGenerator { grid, hurst, factor: Arc::new(packed), jittered })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn hurst(&self) -> HurstIndex {
        self.hurst
    }

    /// Whether the diagonal jitter was needed to factor the covariance.
    pub fn jittered(&self) -> bool {
        self.jittered
    }

    pub fn sample(&self, seed: u64) -> FbmPath {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z: Vec<f64> = (0..self.grid.n()).map(|_| StandardNormal.sample(&mut rng)).collect();
        FbmPath {
            grid: self.grid,
            values: self.correlate(&z),
            hurst: self.hurst,
            seed,
        }
    }

    /// Applies the lower factor to a vector of standard normals.
    pub fn correlate(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.grid.n(), "normal vector length must match the grid");
        (0..z.len())
            .map(|i| {
                let row = &self.factor[i * (i + 1) / 2..][..=i];
                row.iter().zip(z).map(|(l, z)| l * z).sum()
            })
            .collect()
    }
}

/// One draw `(B_{t_1}, ..., B_{t_n})`; `B_0 = 0` is not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct FbmPath {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub hurst: HurstIndex,
    pub seed: u64,
}

impl FbmPath {
    /// `B_{t_1} - 0, B_{t_2} - B_{t_1}, ...`
    pub fn increments(&self) -> Vec<f64> {
        increments(&self.values)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        io::write_columns(path, &["t", "B"], &[&self.grid.points(), &self.values])
    }
}

/// Convenience wrapper building a one-off generator.
pub fn generate_fbm_path(grid: TimeGrid, h: HurstIndex, seed: u64) -> Result<FbmPath> {
    Ok(FbmGenerator::new(grid, h)?.sample(seed))
}

pub fn increments(values: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    values
        .iter()
        .map(|&v| {
            let d = v - prev;
            prev = v;
            d
        })
        .collect()
}
