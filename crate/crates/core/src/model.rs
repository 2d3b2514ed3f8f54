//! Market-model parameter set and derived scalar quantities.
//!
//! The parameter tuple collects the investment horizon, the power-utility
//! exponent θ, the return/drift volatilities, the mean-reversion matrix κ
//! and the (conditional and unconditional) initial-drift distribution, plus
//! the optional expert-opinion channel. Everything downstream assumes a
//! `ModelParams` that went through [`validate_params`].

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::error::{Error, Result, Violation};
use crate::linalg;

/// Relative tolerance below which an asymmetric input matrix is silently
/// symmetrized; config files round-trip through decimal text.
const SYMMETRY_TOL: f64 = 1e-12;

/// Positive-definiteness margin: smallest eigenvalue must exceed
/// `PD_TOL * largest`.
const PD_TOL: f64 = 1e-12;

/// Untyped parameter record as read from a config file. Matrices are nested
/// arrays, row-major.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams {
    #[serde(rename = "horizon_T")]
    pub horizon_t: f64,
    pub theta: f64,
    pub dim_d: usize,
    #[serde(rename = "sigma_R")]
    pub sigma_r: Vec<Vec<f64>>,
    pub sigma_mu: Vec<Vec<f64>>,
    pub kappa: Vec<Vec<f64>>,
    pub mu_bar: Vec<f64>,
    /// Initial wealth; defaults to 1 (all bounds scale as x0^θ).
    pub x0: Option<f64>,
    pub m_bar0: Vec<f64>,
    pub q_bar0: Vec<Vec<f64>>,
    pub m0: Vec<f64>,
    pub q0: Vec<Vec<f64>>,
    pub expert_gamma: Option<Vec<Vec<f64>>>,
    pub expert_arrivals: Option<Vec<f64>>,
    #[serde(rename = "sigma_J")]
    pub sigma_j: Option<Vec<Vec<f64>>>,
}

/// Validated market-model parameters. Immutable by convention after
/// construction; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Investment horizon T in years, > 0.
    pub horizon_t: f64,
    /// Power-utility parameter, θ < 1; θ = 0 means log utility.
    pub theta: f64,
    /// Number of risky assets d.
    pub dim_d: usize,
    /// Return volatility σ_R, d×d1.
    pub sigma_r: DMatrix<f64>,
    /// Drift volatility σ_μ, d×d2.
    pub sigma_mu: DMatrix<f64>,
    /// Mean-reversion speed κ, d×d, all eigenvalues with positive real part.
    pub kappa: DMatrix<f64>,
    /// Mean-reversion level μ̄.
    pub mu_bar: DVector<f64>,
    /// Initial wealth.
    pub x0: f64,
    /// Unconditional mean of the initial drift μ0.
    pub m_bar0: DVector<f64>,
    /// Unconditional covariance of μ0, symmetric PSD.
    pub q_bar0: DMatrix<f64>,
    /// Conditional mean of μ0 given the investor prior.
    pub m0: DVector<f64>,
    /// Conditional covariance of μ0 given the investor prior, symmetric PSD.
    pub q0: DMatrix<f64>,
    /// Expert-opinion noise covariance Γ, symmetric PD.
    pub expert_gamma: Option<DMatrix<f64>>,
    /// Expert arrival times, strictly increasing within [0, T].
    pub expert_arrivals: Option<Vec<f64>>,
    /// Continuous-expert volatility σ_J, d×d3.
    pub sigma_j: Option<DMatrix<f64>>,
}

impl ModelParams {
    /// Σ_R := σ_R σ_Rᵀ.
    pub fn cov_r(&self) -> DMatrix<f64> {
        &self.sigma_r * self.sigma_r.transpose()
    }

    /// Σ_μ := σ_μ σ_μᵀ.
    pub fn cov_mu(&self) -> DMatrix<f64> {
        &self.sigma_mu * self.sigma_mu.transpose()
    }

    /// Σ_J := σ_J σ_Jᵀ, when the continuous expert is configured.
    pub fn cov_j(&self) -> Option<DMatrix<f64>> {
        self.sigma_j.as_ref().map(|s| s * s.transpose())
    }

    /// Scalar shortcuts, valid only for d = 1.
    pub fn scalar(&self) -> Result<(f64, f64, f64)> {
        if self.dim_d != 1 {
            return Err(Error::NotOneDimensional(self.dim_d));
        }
        Ok((
            self.kappa[(0, 0)],
            self.cov_mu()[(0, 0)],
            self.cov_r()[(0, 0)],
        ))
    }
}

/// The scalar ψ = θ / (2(1−θ)²) controlling the exponential bound process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskCoefficient {
    pub psi: f64,
}

/// ψ = θ / (2(1−θ)²); exact zero at θ = 0, error for θ ≥ 1.
pub fn risk_coefficient(theta: f64) -> Result<RiskCoefficient> {
    if theta >= 1.0 {
        return Err(Error::BadTheta(theta));
    }
    if theta == 0.0 {
        return Ok(RiskCoefficient { psi: 0.0 });
    }
    let one_minus = 1.0 - theta;
    Ok(RiskCoefficient {
        psi: theta / (2.0 * one_minus * one_minus),
    })
}

/// Stationary covariance of the drift: the solution V of κV + Vκᵀ = Σ_μ.
pub fn stationary_drift_covariance(
    kappa: &DMatrix<f64>,
    sigma_mu: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    if !kappa_stable(kappa) {
        return Err(Error::UnstableKappa);
    }
    let cov = sigma_mu * sigma_mu.transpose();
    linalg::solve_lyapunov(kappa, &cov)
}

fn kappa_stable(kappa: &DMatrix<f64>) -> bool {
    kappa.complex_eigenvalues().iter().all(|e| e.re > 0.0)
}

fn to_matrix(
    field: &'static str,
    rows: &[Vec<f64>],
    nrows: usize,
    ncols_min: usize,
    violations: &mut Vec<Violation>,
) -> Option<DMatrix<f64>> {
    if rows.len() != nrows {
        violations.push(Violation::BadShape {
            field,
            detail: format!("expected {nrows} rows, got {}", rows.len()),
        });
        return None;
    }
    let ncols = rows.first().map_or(0, |r| r.len());
    if ncols < ncols_min || rows.iter().any(|r| r.len() != ncols) {
        violations.push(Violation::BadShape {
            field,
            detail: format!("expected {nrows}x(>= {ncols_min}) rectangular matrix"),
        });
        return None;
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Some(DMatrix::from_row_slice(nrows, ncols, &flat))
}

fn to_square(
    field: &'static str,
    rows: &[Vec<f64>],
    d: usize,
    violations: &mut Vec<Violation>,
) -> Option<DMatrix<f64>> {
    let m = to_matrix(field, rows, d, d, violations)?;
    if m.ncols() != d {
        violations.push(Violation::BadShape {
            field,
            detail: format!("must be {d}x{d}"),
        });
        return None;
    }
    Some(m)
}

fn to_vector(
    field: &'static str,
    v: &[f64],
    len: usize,
    violations: &mut Vec<Violation>,
) -> Option<DVector<f64>> {
    if v.len() != len {
        violations.push(Violation::BadShape {
            field,
            detail: format!("expected length {len}, got {}", v.len()),
        });
        return None;
    }
    Some(DVector::from_column_slice(v))
}

/// Symmetrize a near-symmetric matrix; record a violation when the asymmetry
/// exceeds the relative tolerance.
fn symmetrized(
    field: &'static str,
    m: DMatrix<f64>,
    violations: &mut Vec<Violation>,
) -> DMatrix<f64> {
    let scale = m.norm().max(1e-300);
    let skew = (&m - m.transpose()).norm() / scale;
    if skew > SYMMETRY_TOL {
        violations.push(Violation::NotSymmetric { field });
    }
    linalg::symmetrize(&m)
}

fn check_pd(field: &'static str, m: &DMatrix<f64>, violations: &mut Vec<Violation>) {
    let (lo, hi) = linalg::eig_range(m);
    if lo <= PD_TOL * hi.max(0.0) {
        violations.push(Violation::NonPositiveDefinite { field, min_eig: lo });
    }
}

fn check_psd(field: &'static str, m: &DMatrix<f64>, violations: &mut Vec<Violation>) {
    let (lo, hi) = linalg::eig_range(m);
    if lo < -PD_TOL * hi.abs().max(1.0) {
        violations.push(Violation::NotPositiveSemidefinite { field, min_eig: lo });
    }
}

/// Validate an untyped record into a [`ModelParams`], collecting every
/// violation instead of failing fast. Idempotent: re-validating the raw form
/// of an already-valid parameter set returns an equal value.
pub fn validate_params(raw: &RawParams) -> Result<ModelParams> {
    let mut violations = Vec::new();
    let d = raw.dim_d;
    if d == 0 {
        return Err(Error::InvalidParams(vec![Violation::BadShape {
            field: "dim_d",
            detail: "asset count must be positive".into(),
        }]));
    }

    if raw.theta >= 1.0 {
        violations.push(Violation::BadTheta { got: raw.theta });
    }
    if raw.horizon_t <= 0.0 {
        violations.push(Violation::NotPositive {
            field: "horizon_T",
            got: raw.horizon_t,
        });
    }
    let x0 = raw.x0.unwrap_or(1.0);
    if x0 <= 0.0 {
        violations.push(Violation::NotPositive {
            field: "x0",
            got: x0,
        });
    }

    let sigma_r = to_matrix("sigma_R", &raw.sigma_r, d, d, &mut violations);
    let sigma_mu = to_matrix("sigma_mu", &raw.sigma_mu, d, d, &mut violations);
    let kappa = to_square("kappa", &raw.kappa, d, &mut violations);
    let mu_bar = to_vector("mu_bar", &raw.mu_bar, d, &mut violations);
    let m_bar0 = to_vector("m_bar0", &raw.m_bar0, d, &mut violations);
    let m0 = to_vector("m0", &raw.m0, d, &mut violations);
    let q_bar0 = to_square("q_bar0", &raw.q_bar0, d, &mut violations)
        .map(|m| symmetrized("q_bar0", m, &mut violations));
    let q0 =
        to_square("q0", &raw.q0, d, &mut violations).map(|m| symmetrized("q0", m, &mut violations));

    if let Some(s) = &sigma_r {
        check_pd("sigma_R", &(s * s.transpose()), &mut violations);
    }
    if let Some(s) = &sigma_mu {
        check_pd("sigma_mu", &(s * s.transpose()), &mut violations);
    }
    if let Some(k) = &kappa {
        if !kappa_stable(k) {
            let worst = k
                .complex_eigenvalues()
                .iter()
                .map(|e| e.re)
                .fold(f64::INFINITY, f64::min);
            violations.push(Violation::UnstableKappa { re: worst });
        }
    }
    if let Some(q) = &q_bar0 {
        check_psd("q_bar0", q, &mut violations);
    }
    if let Some(q) = &q0 {
        check_psd("q0", q, &mut violations);
    }

    let expert_gamma = raw.expert_gamma.as_ref().and_then(|g| {
        let m = to_square("expert_gamma", g, d, &mut violations)?;
        let m = symmetrized("expert_gamma", m, &mut violations);
        check_pd("expert_gamma", &m, &mut violations);
        Some(m)
    });
    let sigma_j = raw
        .sigma_j
        .as_ref()
        .and_then(|s| to_matrix("sigma_J", s, d, d, &mut violations))
        .inspect(|s| check_pd("sigma_J", &(s * s.transpose()), &mut violations));

    if let Some(arrivals) = &raw.expert_arrivals {
        let in_range = arrivals.iter().all(|&t| (0.0..=raw.horizon_t).contains(&t));
        let increasing = arrivals.windows(2).all(|w| w[0] < w[1]);
        if !in_range {
            violations.push(Violation::BadArrivalTimes(format!(
                "times must lie in [0, {}]",
                raw.horizon_t
            )));
        } else if !increasing {
            violations.push(Violation::BadArrivalTimes(
                "times must be strictly increasing".into(),
            ));
        }
    }

    if !violations.is_empty() {
        return Err(Error::InvalidParams(violations));
    }
    Ok(ModelParams {
        horizon_t: raw.horizon_t,
        theta: raw.theta,
        dim_d: d,
        sigma_r: sigma_r.unwrap(),
        sigma_mu: sigma_mu.unwrap(),
        kappa: kappa.unwrap(),
        mu_bar: mu_bar.unwrap(),
        x0,
        m_bar0: m_bar0.unwrap(),
        q_bar0: q_bar0.unwrap(),
        m0: m0.unwrap(),
        q0: q0.unwrap(),
        expert_gamma,
        expert_arrivals: raw.expert_arrivals.clone(),
        sigma_j,
    })
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// The d = 1 baseline used across the test suite: T = 1, θ = 0.3,
    /// σ_R = 0.25, σ_μ = 1, κ = 3, μ̄ = 0, m0 = 0, q0 = 1/6.
    pub fn baseline_raw() -> RawParams {
        RawParams {
            horizon_t: 1.0,
            theta: 0.3,
            dim_d: 1,
            sigma_r: vec![vec![0.25]],
            sigma_mu: vec![vec![1.0]],
            kappa: vec![vec![3.0]],
            mu_bar: vec![0.0],
            x0: None,
            m_bar0: vec![0.0],
            q_bar0: vec![vec![1.0 / 6.0]],
            m0: vec![0.0],
            q0: vec![vec![1.0 / 6.0]],
            expert_gamma: None,
            expert_arrivals: None,
            sigma_j: None,
        }
    }

    pub fn baseline() -> ModelParams {
        validate_params(&baseline_raw()).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::{baseline, baseline_raw};
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn baseline_is_valid() {
        let p = baseline();
        assert_eq!(p.x0, 1.0, "x0 defaults to 1 when absent");
        assert_relative_eq!(p.q0[(0, 0)], 1.0 / 6.0);
    }

    #[test]
    fn unstable_kappa_rejected() {
        let mut raw = baseline_raw();
        raw.kappa = vec![vec![-1.0]];
        match validate_params(&raw) {
            Err(Error::InvalidParams(vs)) => {
                assert!(vs
                    .iter()
                    .any(|v| matches!(v, Violation::UnstableKappa { .. })))
            }
            other => panic!("expected UnstableKappa, got {other:?}"),
        }
    }

    #[test]
    fn theta_one_rejected() {
        let mut raw = baseline_raw();
        raw.theta = 1.0;
        match validate_params(&raw) {
            Err(Error::InvalidParams(vs)) => {
                assert!(vs.iter().any(|v| matches!(v, Violation::BadTheta { .. })))
            }
            other => panic!("expected BadTheta, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_q0_allowed() {
        // Full prior knowledge of the initial drift: q0 = 0 is PSD.
        let mut raw = baseline_raw();
        raw.q0 = vec![vec![0.0]];
        assert!(validate_params(&raw).is_ok());
    }

    #[test]
    fn arrival_times_checked() {
        let mut raw = baseline_raw();
        raw.expert_arrivals = Some(vec![0.2, 0.2]);
        assert!(matches!(
            validate_params(&raw),
            Err(Error::InvalidParams(_))
        ));
        raw.expert_arrivals = Some(vec![0.2, 1.5]);
        assert!(matches!(
            validate_params(&raw),
            Err(Error::InvalidParams(_))
        ));
        raw.expert_arrivals = Some(vec![0.2, 0.9]);
        assert!(validate_params(&raw).is_ok());
    }

    #[test]
    fn validation_is_idempotent() {
        let p = baseline();
        let again = validate_params(&baseline_raw()).unwrap();
        assert_eq!(p, again);
    }

    #[test]
    fn risk_coefficient_values() {
        assert_relative_eq!(risk_coefficient(0.5).unwrap().psi, 1.0);
        assert_eq!(risk_coefficient(0.0).unwrap().psi, 0.0);
        assert_relative_eq!(
            risk_coefficient(0.3).unwrap().psi,
            0.306_122_448_979_591_84,
            max_relative = 1e-15
        );
        assert!(matches!(risk_coefficient(1.0), Err(Error::BadTheta(_))));
    }

    #[test]
    fn risk_coefficient_increasing_and_diverging() {
        let mut last = 0.0;
        for i in 1..100 {
            let theta = i as f64 / 100.0;
            let psi = risk_coefficient(theta).unwrap().psi;
            assert!(psi > last, "psi must increase on (0,1)");
            last = psi;
        }
        assert!(risk_coefficient(0.999_999).unwrap().psi > 1e10);
    }

    #[test]
    fn stationary_covariance_examples() {
        let p = baseline();
        let v = stationary_drift_covariance(&p.kappa, &p.sigma_mu).unwrap();
        assert_relative_eq!(v[(0, 0)], 1.0 / 6.0, max_relative = 1e-12);

        let zero = DMatrix::from_element(1, 1, 0.0);
        let v0 = stationary_drift_covariance(&p.kappa, &zero).unwrap();
        assert_eq!(v0[(0, 0)], 0.0);

        let k = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        let s = DMatrix::identity(2, 2);
        let v2 = stationary_drift_covariance(&k, &s).unwrap();
        assert_relative_eq!(v2[(0, 0)], 0.5, max_relative = 1e-12);
        assert_relative_eq!(v2[(1, 1)], 0.25, max_relative = 1e-12);

        let unstable = DMatrix::from_element(1, 1, -1.0);
        assert!(matches!(
            stationary_drift_covariance(&unstable, &s.view((0, 0), (1, 1)).into()),
            Err(Error::UnstableKappa)
        ));
    }

    #[test]
    fn lyapunov_residual_small() {
        let k = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 1.0]);
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.5]);
        let v = stationary_drift_covariance(&k, &s).unwrap();
        let cov = &s * s.transpose();
        let residual = (&k * &v + &v * k.transpose() - &cov).norm();
        assert!(residual <= 1e-10 * cov.norm());
    }
}
