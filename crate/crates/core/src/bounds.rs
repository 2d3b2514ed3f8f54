//! Value-function upper bounds.
//!
//! Full information: V ≤ (x0^θ/θ)·d(0, μ0)^{1−θ}. Partial information
//! projects the same bound onto the investor prior N(m0, q0):
//! V ≤ (x0^θ/θ)·C_0 with C_0 = d(0, m0)^{1−θ}·det(K)^{−1/2}·exp{½aᵀq0K⁻¹a},
//! K = I − 2A(0)q0 and a = 2A(0)m0 + B(0), valid while every eigenvalue of K
//! is positive. The Gaussian quadratic-exponential expectation underlying
//! the projection is exposed on its own.

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::filter::Regime;
use crate::linalg;
use crate::model::ModelParams;
use crate::riccati::{eval_d, RiccatiSolution};

/// Upper bound on the value function. θ < 0 yields the trivial bound 0
/// (power utility is negative there); θ = 0 is reported as finite without a
/// number — the log-utility constant is out of scope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UtilityBound {
    Value(f64),
    /// Log utility: bounded, constant not quantified here.
    FiniteUnquantified,
}

impl UtilityBound {
    pub fn value(&self) -> Option<f64> {
        match self {
            UtilityBound::Value(v) => Some(*v),
            UtilityBound::FiniteUnquantified => None,
        }
    }
}

impl Serialize for UtilityBound {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            UtilityBound::Value(v) => serializer.serialize_f64(*v),
            UtilityBound::FiniteUnquantified => serializer.serialize_str("finite"),
        }
    }
}

/// Bound together with its intermediates. `K`, `a`, `C0H` and the
/// eigenvalues of K are populated for partial-information regimes only.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub regime: Regime,
    pub bound: UtilityBound,
    pub d00: f64,
    #[serde(rename = "K")]
    pub k: Option<Vec<Vec<f64>>>,
    pub a: Option<Vec<f64>>,
    #[serde(rename = "C0H")]
    pub c0h: Option<f64>,
    #[serde(rename = "eigenvalues_of_K")]
    pub eigenvalues_of_k: Option<Vec<f64>>,
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// E[exp{(Y+b)ᵀU(Y+b)}] for Y ~ N(μ_Y, Σ_Y), U symmetric, requiring every
/// eigenvalue of I − 2UΣ_Y to be positive:
/// det(I − 2UΣ_Y)^{−1/2}·exp{(μ_Y+b)ᵀ(I − 2UΣ_Y)⁻¹U(μ_Y+b)}.
///
/// Σ_Y only needs to be PSD. The eigenvalue test and the determinant run
/// through the symmetric similar matrix I − 2·S U S with S = Σ_Y^{1/2},
/// which has the same spectrum.
pub fn gaussian_quad_exp_expectation(
    mu_y: &DVector<f64>,
    sigma_y: &DMatrix<f64>,
    u: &DMatrix<f64>,
    b: &DVector<f64>,
) -> Result<f64> {
    let d = mu_y.len();
    let s = linalg::sqrt_psd(&linalg::symmetrize(sigma_y), 1e-10)?;
    let sym = DMatrix::identity(d, d) - 2.0 * &s * u * &s;
    let (vals, _) = linalg::sym_eigen(&linalg::symmetrize(&sym));
    let min_eig = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if min_eig <= 0.0 {
        return Err(Error::EigenvalueConditionViolated { min_eig });
    }
    let det: f64 = vals.iter().product();

    let shifted = mu_y + b;
    let g = DMatrix::identity(d, d) - 2.0 * u * sigma_y;
    let x = g
        .lu()
        .solve(&(u * &shifted))
        .ok_or(Error::EigenvalueConditionViolated { min_eig })?;
    Ok(det.powf(-0.5) * shifted.dot(&x).exp())
}

fn theta_side_cases(params: &ModelParams, regime: Regime, d00: f64) -> Option<BoundReport> {
    if params.theta < 0.0 {
        // Negative utility: zero is a valid constant bound.
        return Some(BoundReport {
            regime,
            bound: UtilityBound::Value(0.0),
            d00,
            k: None,
            a: None,
            c0h: None,
            eigenvalues_of_k: None,
        });
    }
    if params.theta == 0.0 {
        return Some(BoundReport {
            regime,
            bound: UtilityBound::FiniteUnquantified,
            d00,
            k: None,
            a: None,
            c0h: None,
            eigenvalues_of_k: None,
        });
    }
    None
}

fn require_t0(sol: &RiccatiSolution) -> Result<()> {
    if sol.first_valid() > 0 {
        let exploded_at = sol.explosion().map(|e| e.exploded_at).unwrap_or(f64::NAN);
        return Err(Error::ExplodedRiccati { exploded_at });
    }
    Ok(())
}

/// Full-information bound (x0^θ/θ)·d(0, μ0)^{1−θ}, the benchmark for the
/// investor observing the drift; also covers H = F feasibility.
pub fn full_info_bound(
    params: &ModelParams,
    sol: &RiccatiSolution,
    mu0: &DVector<f64>,
) -> Result<BoundReport> {
    if params.theta <= 0.0 {
        let d00 = if sol.first_valid() == 0 {
            eval_d(sol, 0.0, mu0)?
        } else {
            f64::NAN
        };
        return Ok(theta_side_cases(params, Regime::F, d00).expect("theta <= 0"));
    }
    require_t0(sol)?;
    let d00 = eval_d(sol, 0.0, mu0)?;
    let bound = params.x0.powf(params.theta) / params.theta * d00.powf(1.0 - params.theta);
    Ok(BoundReport {
        regime: Regime::F,
        bound: UtilityBound::Value(bound),
        d00,
        k: None,
        a: None,
        c0h: None,
        eigenvalues_of_k: None,
    })
}

/// Partial-information bound (x0^θ/θ)·C_0 for an investor with prior
/// N(m0, q0) on the initial drift. Errors with
/// [`Error::EigenvalueConditionViolated`] when some eigenvalue of
/// K = I − 2A(0)q0 is ≤ 0.
pub fn partial_info_bound(
    params: &ModelParams,
    sol: &RiccatiSolution,
    m0: &DVector<f64>,
    q0: &DMatrix<f64>,
    regime: Regime,
) -> Result<BoundReport> {
    if params.theta <= 0.0 {
        let d00 = if sol.first_valid() == 0 {
            eval_d(sol, 0.0, m0)?
        } else {
            f64::NAN
        };
        return Ok(theta_side_cases(params, regime, d00).expect("theta <= 0"));
    }
    require_t0(sol)?;
    let d = params.dim_d;
    let a0 = sol.a_at(0).expect("valid at t=0");
    let b0 = sol.b_at(0).expect("valid at t=0");
    let d00 = eval_d(sol, 0.0, m0)?;

    // Eigenvalues of K via the symmetric similar matrix S q0 S, S = A(0)^{1/2}.
    let s = linalg::sqrt_psd(a0, 1e-8 * (1.0 + a0.norm()))?;
    let (lambdas, _) = linalg::sym_eigen(&linalg::symmetrize(&(&s * q0 * &s)));
    let mut k_eigs: Vec<f64> = lambdas.iter().map(|l| 1.0 - 2.0 * l).collect();
    k_eigs.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    let min_eig = k_eigs[0];
    if min_eig <= 0.0 {
        return Err(Error::EigenvalueConditionViolated { min_eig });
    }
    let det_k: f64 = k_eigs.iter().product();

    let k_mat = DMatrix::identity(d, d) - 2.0 * a0 * q0;
    let a_vec = 2.0 * a0 * m0 + b0;
    let exponent = if q0.norm() == 0.0 || a_vec.norm() == 0.0 {
        0.0
    } else {
        let x = k_mat
            .clone()
            .lu()
            .solve(&a_vec)
            .ok_or(Error::EigenvalueConditionViolated { min_eig })?;
        0.5 * a_vec.dot(&(q0 * x))
    };

    let c0h = d00.powf(1.0 - params.theta) * det_k.powf(-0.5) * exponent.exp();
    let bound = params.x0.powf(params.theta) / params.theta * c0h;
    Ok(BoundReport {
        regime,
        bound: UtilityBound::Value(bound),
        d00,
        k: Some(matrix_rows(&k_mat)),
        a: Some(a_vec.iter().copied().collect()),
        c0h: Some(c0h),
        eigenvalues_of_k: Some(k_eigs),
    })
}
