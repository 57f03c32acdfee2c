//! Orthonormal families on an interval `I = [a, b]`.
//!
//! The trigonometric family is defined on `[0, 1]` by `phi_1 = 1`,
//! `phi_{2k} = sqrt(2) cos(2 pi k x)`, `phi_{2k+1} = sqrt(2) sin(2 pi k x)` and
//! carried to `[a, b]` by `phi^I(x) = (b - a)^{-1/2} phi((x - a) / (b - a))`.
//! Every function vanishes outside `I`.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalSupport {
    a: f64,
    b: f64,
}

impl IntervalSupport {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::invalid("support", format!("need finite a < b, got [{a}, {b}]")));
        }
        Ok(IntervalSupport { a, b })
    }

    pub fn unit() -> Self {
        IntervalSupport { a: 0.0, b: 1.0 }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.a && x <= self.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[non_exhaustive]
pub enum BasisFamily {
    Trigonometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub family: BasisFamily,
    pub support: IntervalSupport,
    pub m_max: usize,
}

impl BasisSpec {
    pub fn trigonometric(support: IntervalSupport, m_max: usize) -> Result<Self> {
        if m_max == 0 {
            return Err(Error::invalid("m_max", "need at least one basis function"));
        }
        Ok(BasisSpec { family: BasisFamily::Trigonometric, support, m_max })
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.m_max {
            return Err(Error::invalid("j", format!("basis index {j} outside 1..={}", self.m_max)));
        }
        Ok(())
    }

    fn check_dim(&self, m: usize) -> Result<()> {
        if m == 0 || m > self.m_max {
            return Err(Error::invalid("m", format!("dimension {m} outside 1..={}", self.m_max)));
        }
        Ok(())
    }

    /// `phi_j(x)`, zero outside the support.
    pub fn eval(&self, j: usize, x: f64) -> Result<f64> {
        self.check_index(j)?;
        Ok(self.eval_unchecked(j, x))
    }

    pub(crate) fn eval_unchecked(&self, j: usize, x: f64) -> f64 {
        if !self.support.contains(x) {
            return 0.0;
        }
        let len = self.support.len();
        let u = (x - self.support.a) / len;
        let scale = len.sqrt().recip();
        match self.family {
            BasisFamily::Trigonometric => {
                if j == 1 {
                    return scale;
                }
                let arg = 2.0 * PI * (j / 2) as f64 * u;
                let v = if j.is_multiple_of(2) { arg.cos() } else { arg.sin() };
                scale * SQRT_2 * v
            }
        }
    }

    /// Writes `phi_1(x), ..., phi_m(x)` into `out[..m]`.
    pub fn eval_all(&self, x: f64, out: &mut [f64]) {
        let m = out.len().min(self.m_max);
        if !self.support.contains(x) {
            out[..m].fill(0.0);
            return;
        }
        for (j, slot) in out[..m].iter_mut().enumerate() {
            *slot = self.eval_unchecked(j + 1, x);
        }
    }

    /// `sup |phi_j'|` on the support, which is the Lipschitz seminorm there.
    pub fn lipschitz_constant(&self, j: usize) -> Result<f64> {
        self.check_index(j)?;
        let rescale = self.support.len().powf(-1.5);
        Ok(match self.family {
            BasisFamily::Trigonometric => 2.0 * SQRT_2 * PI * (j / 2) as f64 * rescale,
        })
    }

    /// `L(m) = sum_{j <= m} ||phi_j||_Lip^2`.
    pub fn lipschitz_budget(&self, m: usize) -> Result<f64> {
        self.check_dim(m)?;
        (1..=m).map(|j| self.lipschitz_constant(j).map(|c| c * c)).sum()
    }

    /// Trapezoid approximation of `<phi_j, phi_k>` with `points` nodes on the support.
    pub fn gram_matrix(&self, m: usize, points: usize) -> Result<DMatrix<f64>> {
        self.check_dim(m)?;
        if points < 4 * m {
            return Err(Error::invalid("quadrature_points", format!("need at least 4m = {} nodes, got {points}", 4 * m)));
        }
        let h = self.support.len() / (points - 1) as f64;
        let mut gram = DMatrix::zeros(m, m);
        let mut phi = vec![0.0; m];
        for i in 0..points {
            let x = if i == points - 1 { self.support.b } else { self.support.a + i as f64 * h };
            self.eval_all(x, &mut phi);
            let w = if i == 0 || i == points - 1 { 0.5 * h } else { h };
            for r in 0..m {
                for c in 0..m {
                    gram[(r, c)] += w * phi[r] * phi[c];
                }
            }
        }
        Ok(gram)
    }
}
