//! Error types shared across the crate.

use thiserror::Error;

use crate::filter::Regime;

/// A single parameter-validation failure. Validation collects all of them
/// instead of stopping at the first.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("{field}: matrix is not positive definite (min eigenvalue {min_eig:.3e})")]
    NonPositiveDefinite { field: &'static str, min_eig: f64 },
    #[error("{field}: matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPositiveSemidefinite { field: &'static str, min_eig: f64 },
    #[error("{field}: asymmetry exceeds 1e-12 relative; refusing to symmetrize")]
    NotSymmetric { field: &'static str },
    #[error("kappa: eigenvalue with real part {re:.3e} <= 0; mean reversion must be stable")]
    UnstableKappa { re: f64 },
    #[error("theta: must be < 1, got {got}")]
    BadTheta { got: f64 },
    #[error("expert_arrivals: {0}")]
    BadArrivalTimes(String),
    #[error("{field}: must be > 0, got {got}")]
    NotPositive { field: &'static str, got: f64 },
    #[error("{field}: {detail}")]
    BadShape { field: &'static str, detail: String },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidParams(Vec<Violation>),
    #[error("theta must be < 1, got {0}")]
    BadTheta(f64),
    #[error("kappa has an eigenvalue with non-positive real part")]
    UnstableKappa,
    #[error("operation requires a single risky asset (d = 1), got d = {0}")]
    NotOneDimensional(usize),
    #[error("steps must be >= {min}, got {got}")]
    TooFewSteps { min: usize, got: usize },
    #[error("t = {t} is not a point of the solution grid")]
    NotOnGrid { t: f64 },
    #[error("t = {t} precedes the Riccati blow-up at t = {exploded_at}")]
    ExplodedRegion { t: f64, exploded_at: f64 },
    #[error("Riccati solution exploded at t = {exploded_at}; bound undefined")]
    ExplodedRiccati { exploded_at: f64 },
    #[error("backward time {s} is at or beyond the explosion time {t_explosion}")]
    BeyondExplosion { s: f64, t_explosion: f64 },
    #[error(
        "eigenvalue condition violated: min eigenvalue {min_eig:.6} <= 0, expectation diverges"
    )]
    EigenvalueConditionViolated { min_eig: f64 },
    #[error("regime {regime:?} requires {what}")]
    MissingExpertConfig { regime: Regime, what: &'static str },
    #[error("covariance lost positive semidefiniteness (eigenvalue {min_eig:.3e})")]
    LostPositivity { min_eig: f64 },
    #[error("expert covariance Gamma must be symmetric positive definite")]
    SingularGamma,
    #[error("stationary covariance is not defined for regime {0:?}")]
    UnsupportedRegime(Regime),
    #[error("matrix is not positive semidefinite (eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },
    #[error("unknown sweep axis `{0}` (expected theta, T, sigma_R, sigma_mu, kappa or q0)")]
    UnknownAxis(String),
    #[error("criterion does not change sign on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("log utility (theta = 0) is outside the Monte Carlo utility target")]
    LogUtility,
    #[error("did not converge: {0}")]
    NoConvergence(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
