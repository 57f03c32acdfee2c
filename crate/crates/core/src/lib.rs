//! Simulation of stationary fractional SDEs and projection estimation of
//! their stationary density, with penalized choice of the dimension.
//!
//! The pipeline is [`fbm`] → [`sde`] → [`estimator`] / [`selection`], driven
//! at scale by [`experiment`]. The `fde-density` binary wraps it ([`cli`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod cli;
pub mod config;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod fbm;
pub mod io;
pub mod parallel;
pub mod quadrature;
pub mod sde;
pub mod selection;

pub use error::{Error, Result};

/// Upper dimension considered by adaptive selection when no override is given.
pub const DEFAULT_M_MAX: usize = 200;
