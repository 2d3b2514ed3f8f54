//! Feasibility analysis for power-utility portfolio optimization when
//! expected returns are driven by a partially observed Gaussian
//! mean-reverting drift.
//!
//! For relative risk aversion below that of log utility the maximum
//! expected utility of terminal wealth can be infinite; whether it is
//! depends on the investment horizon and on the parameters controlling the
//! variance of prices and drift. This crate decides that question through
//! sufficient conditions, computes explicit upper bounds on the value
//! function, and validates every analytic formula against brute-force
//! Monte Carlo.
//!
//! Module map:
//! - [`model`]: validated parameter set and derived scalars;
//! - [`riccati`]: terminal-value A/B/C system behind the moment d(t, m),
//!   blow-up detection and the scalar closed forms;
//! - [`filter`]: conditional covariance of the drift estimate per
//!   information regime, with expert-opinion jumps;
//! - [`bounds`]: value-function upper bounds and the Gaussian
//!   quadratic-exponential expectation;
//! - [`verdict`]: well-posedness classification, feasibility-region sweeps
//!   and critical parameter values;
//! - [`oracle`]: Monte Carlo cross-checks (exact OU stepping);
//! - [`config`] and [`cli`]: parameter files and the command-line surface.

pub mod bounds;
pub mod cli;
pub mod config;
pub mod error;
pub mod filter;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod riccati;
pub mod verdict;

pub use error::{Error, Result};
