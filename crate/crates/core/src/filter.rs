//! Conditional covariance Q^H of the drift estimate for the information
//! regimes R (returns only), Z (returns + discrete expert opinions),
//! J (returns + continuous expert) and F (full observation).
//!
//! Between expert arrivals Q follows the Kalman–Bucy covariance equation
//! dQ/dt = −κQ − Qκᵀ + Σ_μ − QΩQ with information-rate matrix Ω = Σ_R⁻¹
//! (regimes R and Z) or Ω = Σ_R⁻¹ + Σ_J⁻¹ (regime J); the observation noises
//! are independent. Discrete expert opinions produce deterministic downward
//! jumps at their (fixed, user-supplied) arrival times.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::ModelParams;
use crate::riccati::MIN_STEPS;

/// Eigenvalues of Q below this abort propagation; above it they are clipped
/// to zero as round-off.
pub const PSD_CLIP_TOL: f64 = 1e-10;

/// Investor information regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// Returns only.
    R,
    /// Returns plus a continuous expert channel.
    J,
    /// Returns plus discrete expert opinions.
    Z,
    /// Full drift observation.
    F,
}

impl std::str::FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "R" | "r" => Ok(Regime::R),
            "J" | "j" => Ok(Regime::J),
            "Z" | "z" => Ok(Regime::Z),
            "F" | "f" => Ok(Regime::F),
            other => Err(Error::Config(format!(
                "unknown regime `{other}` (expected R, J, Z or F)"
            ))),
        }
    }
}

/// Jump of the covariance at an expert arrival (left limit and post-jump
/// value at one grid node).
#[derive(Debug, Clone)]
pub struct JumpRecord {
    pub index: usize,
    pub time: f64,
    pub before: DMatrix<f64>,
    pub after: DMatrix<f64>,
}

/// Trajectory of Q^H on a uniform grid; right-continuous at jumps, with the
/// left limits kept in `jumps`.
#[derive(Debug, Clone)]
pub struct CovariancePath {
    pub regime: Regime,
    pub grid: Vec<f64>,
    q: Vec<DMatrix<f64>>,
    jumps: Vec<JumpRecord>,
}

impl CovariancePath {
    /// Post-jump (right-continuous) value at grid index `i`.
    pub fn q_at(&self, i: usize) -> &DMatrix<f64> {
        &self.q[i]
    }

    pub fn values(&self) -> &[DMatrix<f64>] {
        &self.q
    }

    pub fn jumps(&self) -> &[JumpRecord] {
        &self.jumps
    }

    /// Left limit at grid index `i` (differs from `q_at` only at jump nodes).
    pub fn left_limit_at(&self, i: usize) -> &DMatrix<f64> {
        self.jumps
            .iter()
            .find(|j| j.index == i)
            .map(|j| &j.before)
            .unwrap_or(&self.q[i])
    }
}

fn information_rate(params: &ModelParams, regime: Regime) -> Result<DMatrix<f64>> {
    let inv = |m: DMatrix<f64>, what| {
        m.try_inverse()
            .ok_or_else(|| Error::NoConvergence(format!("{what} is numerically singular")))
    };
    let base = inv(params.cov_r(), "Sigma_R")?;
    match regime {
        Regime::R | Regime::Z => Ok(base),
        Regime::J => {
            let cov_j = params.cov_j().ok_or(Error::MissingExpertConfig {
                regime: Regime::J,
                what: "sigma_J",
            })?;
            Ok(base + inv(cov_j, "Sigma_J")?)
        }
        Regime::F => Ok(DMatrix::zeros(params.dim_d, params.dim_d)),
    }
}

/// Bayesian update of the covariance at an expert arrival:
/// Q⁺ = Q⁻ − Q⁻(Q⁻ + Γ)⁻¹Q⁻, equal to (Q⁻¹ + Γ⁻¹)⁻¹ when Q⁻ is invertible.
pub fn jump_update(q_minus: &DMatrix<f64>, gamma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (lo, hi) = linalg::eig_range(gamma);
    if lo <= 1e-12 * hi.max(1e-300) {
        return Err(Error::SingularGamma);
    }
    let total = q_minus + gamma;
    let inv = total.try_inverse().ok_or(Error::SingularGamma)?;
    let updated = q_minus - q_minus * inv * q_minus;
    linalg::project_psd(&linalg::symmetrize(&updated), PSD_CLIP_TOL)
}

/// Propagate Q^H on a uniform grid of `steps` intervals over [0, T], shared
/// with the Riccati grid so downstream checks line up pointwise. Regime Z
/// snaps each arrival time to its nearest grid node.
pub fn covariance_path(
    params: &ModelParams,
    regime: Regime,
    steps: usize,
) -> Result<CovariancePath> {
    if steps < MIN_STEPS {
        return Err(Error::TooFewSteps {
            min: MIN_STEPS,
            got: steps,
        });
    }
    let d = params.dim_d;
    let h = params.horizon_t / steps as f64;
    let grid: Vec<f64> = (0..=steps).map(|i| i as f64 * h).collect();

    if regime == Regime::F {
        return Ok(CovariancePath {
            regime,
            grid,
            q: vec![DMatrix::zeros(d, d); steps + 1],
            jumps: Vec::new(),
        });
    }

    let omega = information_rate(params, regime)?;
    let (gamma, arrival_nodes) = if regime == Regime::Z {
        let gamma = params
            .expert_gamma
            .clone()
            .ok_or(Error::MissingExpertConfig {
                regime,
                what: "expert_gamma",
            })?;
        let arrivals = params
            .expert_arrivals
            .as_ref()
            .ok_or(Error::MissingExpertConfig {
                regime,
                what: "expert_arrivals",
            })?;
        let nodes: Vec<usize> = arrivals
            .iter()
            .map(|&t| ((t / h).round() as usize).min(steps))
            .collect();
        (Some(gamma), nodes)
    } else {
        (None, Vec::new())
    };

    let kappa = &params.kappa;
    let kappa_t = kappa.transpose();
    let cov_mu = params.cov_mu();
    let rhs =
        |q: &DMatrix<f64>| -> DMatrix<f64> { -kappa * q - q * &kappa_t + &cov_mu - q * &omega * q };

    let mut q = linalg::project_psd(&linalg::symmetrize(&params.q0), PSD_CLIP_TOL)?;
    let mut values = Vec::with_capacity(steps + 1);
    let mut jumps = Vec::new();

    let mut apply_jumps_at = |node: usize, q: &mut DMatrix<f64>| -> Result<()> {
        if let Some(gamma) = &gamma {
            for _ in arrival_nodes.iter().filter(|&&n| n == node) {
                let before = q.clone();
                let after = jump_update(&before, gamma)?;
                jumps.push(JumpRecord {
                    index: node,
                    time: node as f64 * h,
                    before,
                    after: after.clone(),
                });
                *q = after;
            }
        }
        Ok(())
    };

    apply_jumps_at(0, &mut q)?;
    values.push(q.clone());
    for i in 1..=steps {
        let k1 = rhs(&q);
        let k2 = rhs(&(&q + 0.5 * h * &k1));
        let k3 = rhs(&(&q + 0.5 * h * &k2));
        let k4 = rhs(&(&q + h * &k3));
        let next = &q + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        q = linalg::project_psd(&linalg::symmetrize(&next), PSD_CLIP_TOL)?;
        apply_jumps_at(i, &mut q)?;
        values.push(q.clone());
    }

    Ok(CovariancePath {
        regime,
        grid,
        q: values,
        jumps,
    })
}

/// Long-run covariance Q_∞: the stabilizing root of
/// −κQ − Qκᵀ + Σ_μ − QΩQ = 0. Closed form for d = 1, long-horizon
/// integration for d > 1 (residual ≤ 1e−8 enforced).
pub fn stationary_covariance(params: &ModelParams, regime: Regime) -> Result<DMatrix<f64>> {
    if !matches!(regime, Regime::R | Regime::J) {
        return Err(Error::UnsupportedRegime(regime));
    }
    let omega = information_rate(params, regime)?;
    let cov_mu = params.cov_mu();
    let kappa = &params.kappa;
    if params.dim_d == 1 {
        let k = kappa[(0, 0)];
        let om = omega[(0, 0)];
        let var_mu = cov_mu[(0, 0)];
        let q = (-k + (k * k + var_mu * om).sqrt()) / om;
        return Ok(DMatrix::from_element(1, 1, q));
    }

    let kappa_t = kappa.transpose();
    let rhs =
        |q: &DMatrix<f64>| -> DMatrix<f64> { -kappa * q - q * &kappa_t + &cov_mu - q * &omega * q };
    let mut q = DMatrix::zeros(params.dim_d, params.dim_d);
    let h = 5e-4;
    for _ in 0..4000 {
        for _ in 0..500 {
            let k1 = rhs(&q);
            let k2 = rhs(&(&q + 0.5 * h * &k1));
            let k3 = rhs(&(&q + 0.5 * h * &k2));
            let k4 = rhs(&(&q + h * &k3));
            q = linalg::symmetrize(&(&q + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)));
        }
        if rhs(&q).norm() <= 1e-9 {
            return linalg::project_psd(&q, PSD_CLIP_TOL);
        }
    }
    Err(Error::NoConvergence(
        "stationary covariance iteration did not reach residual 1e-9".into(),
    ))
}
