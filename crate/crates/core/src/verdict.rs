//! Well-posedness verdicts, feasibility-region sweeps and critical
//! parameter values.
//!
//! The conditions implemented here are sufficient only, so the negative
//! verdict is `NotGuaranteed`, never "ill-posed". θ ≤ 0 is always feasible.
//! For θ ∈ (0, 1) full information requires a bounded Riccati solution on
//! [0, T]; partial information additionally requires
//! λ_max(A(t)·Q^H_t) < 1/2 at every grid point, including both limits at
//! expert-arrival jumps.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{covariance_path, Regime};
use crate::linalg;
use crate::model::{risk_coefficient, ModelParams};
use crate::riccati::{discriminant, solve_abc};

/// Guard band below the 1/2 threshold of the covariance condition.
pub const LAMBDA_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    WellPosed,
    NotGuaranteed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reason {
    /// θ ≤ 0: well-posed for every parameter choice.
    ThetaNonpositive,
    /// Δ_ψ ≥ 0 (d = 1): bounded Riccati solution for every horizon.
    DeltaNonnegative,
    /// Δ_ψ < 0 but T < T^E (d = 1).
    HorizonBelowExplosion,
    /// Integrator completed without blow-up (d > 1 path).
    RiccatiBounded,
    /// Blow-up at or before the horizon.
    RiccatiExploded,
    /// λ_max(A(t)Q_t) reached 1/2 somewhere on the grid.
    CovarianceConditionFailed,
}

/// Diagnostic payload carried by a verdict; fields are filled where they
/// are cheap and meaningful for the parameter set at hand.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct VerdictDetails {
    pub delta_psi: Option<f64>,
    /// Critical horizon: analytic T^E for d = 1, integrator blow-up
    /// backward time otherwise.
    #[serde(rename = "T_E")]
    pub t_explosion: Option<f64>,
    /// max over the grid of λ_max(A(t)Q_t) (partial checks only).
    pub max_lambda: Option<f64>,
    /// First grid time violating the covariance condition.
    pub first_violation: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub reason: Reason,
    pub details: VerdictDetails,
}

impl Verdict {
    fn well_posed(reason: Reason, details: VerdictDetails) -> Self {
        Verdict {
            status: Status::WellPosed,
            reason,
            details,
        }
    }

    fn not_guaranteed(reason: Reason, details: VerdictDetails) -> Self {
        Verdict {
            status: Status::NotGuaranteed,
            reason,
            details,
        }
    }
}

fn one_dim_details(params: &ModelParams, psi: f64) -> VerdictDetails {
    match discriminant(params, psi) {
        Ok(diag) => VerdictDetails {
            delta_psi: Some(diag.delta_psi),
            t_explosion: Some(diag.explosion_time),
            ..Default::default()
        },
        Err(_) => VerdictDetails::default(),
    }
}

/// Full-information verdict. d = 1 goes through the closed-form
/// discriminant; d > 1 through the integrator's explosion record.
pub fn check_full(params: &ModelParams, steps: usize) -> Result<Verdict> {
    let psi = risk_coefficient(params.theta)?.psi;
    if params.theta <= 0.0 {
        let details = if params.dim_d == 1 {
            one_dim_details(params, psi)
        } else {
            VerdictDetails::default()
        };
        return Ok(Verdict::well_posed(Reason::ThetaNonpositive, details));
    }

    if params.dim_d == 1 {
        let diag = discriminant(params, psi)?;
        let details = VerdictDetails {
            delta_psi: Some(diag.delta_psi),
            t_explosion: Some(diag.explosion_time),
            ..Default::default()
        };
        if diag.delta_psi >= 0.0 {
            return Ok(Verdict::well_posed(Reason::DeltaNonnegative, details));
        }
        if params.horizon_t < diag.explosion_time {
            return Ok(Verdict::well_posed(Reason::HorizonBelowExplosion, details));
        }
        return Ok(Verdict::not_guaranteed(Reason::RiccatiExploded, details));
    }

    let sol = solve_abc(params, psi, steps)?;
    match sol.explosion() {
        None => Ok(Verdict::well_posed(
            Reason::RiccatiBounded,
            VerdictDetails::default(),
        )),
        Some(e) => Ok(Verdict::not_guaranteed(
            Reason::RiccatiExploded,
            VerdictDetails {
                t_explosion: Some(params.horizon_t - e.exploded_at),
                ..Default::default()
            },
        )),
    }
}

/// λ_max(A·Q) for symmetric PSD A and Q, computed through the symmetric
/// similar matrix S Q S with S = A^{1/2}; always real and nonnegative.
pub fn lambda_max_product(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<f64> {
    let tol_a = 1e-9 * (1.0 + a.norm());
    let tol_q = 1e-9 * (1.0 + q.norm());
    let (lo_q, _) = linalg::eig_range(q);
    if lo_q < -tol_q {
        return Err(Error::NotPsd { min_eig: lo_q });
    }
    let s = linalg::sqrt_psd(a, tol_a)?;
    let (_, hi) = linalg::eig_range(&linalg::symmetrize(&(&s * q * &s)));
    Ok(hi.max(0.0))
}

/// Partial-information verdict for regime R, Z or J: the full-information
/// conditions plus the covariance condition λ_max(A(t)Q_t) < 1/2 on the
/// shared grid (both jump limits included). θ ≤ 0 skips the covariance
/// check.
pub fn check_partial(params: &ModelParams, regime: Regime, steps: usize) -> Result<Verdict> {
    let full = check_full(params, steps)?;
    if params.theta <= 0.0 || full.status == Status::NotGuaranteed {
        return Ok(full);
    }

    let psi = risk_coefficient(params.theta)?.psi;
    let sol = solve_abc(params, psi, steps)?;
    if let Some(e) = sol.explosion() {
        return Ok(Verdict::not_guaranteed(
            Reason::RiccatiExploded,
            VerdictDetails {
                t_explosion: Some(params.horizon_t - e.exploded_at),
                ..full.details
            },
        ));
    }
    let path = covariance_path(params, regime, steps)?;

    let mut max_lambda: f64 = 0.0;
    let mut first_violation = None;
    'grid: for i in 0..sol.grid().len() {
        let a = sol.a_at(i).expect("no explosion");
        for q in [path.left_limit_at(i), path.q_at(i)] {
            let lambda = lambda_max_product(a, q)?;
            max_lambda = max_lambda.max(lambda);
            if lambda >= 0.5 - LAMBDA_GUARD {
                first_violation = Some(sol.grid()[i]);
                break 'grid;
            }
        }
    }

    let details = VerdictDetails {
        max_lambda: Some(max_lambda),
        first_violation,
        ..full.details
    };
    match first_violation {
        None => Ok(Verdict::well_posed(full.reason, details)),
        Some(_) => Ok(Verdict::not_guaranteed(
            Reason::CovarianceConditionFailed,
            details,
        )),
    }
}

/// Sweepable scalar parameter axes (d = 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    Theta,
    T,
    SigmaR,
    SigmaMu,
    Kappa,
    Q0,
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::Theta => "theta",
            Axis::T => "T",
            Axis::SigmaR => "sigma_R",
            Axis::SigmaMu => "sigma_mu",
            Axis::Kappa => "kappa",
            Axis::Q0 => "q0",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theta" => Ok(Axis::Theta),
            "T" => Ok(Axis::T),
            "sigma_R" => Ok(Axis::SigmaR),
            "sigma_mu" => Ok(Axis::SigmaMu),
            "kappa" => Ok(Axis::Kappa),
            "q0" => Ok(Axis::Q0),
            other => Err(Error::UnknownAxis(other.to_string())),
        }
    }
}

/// Copy of `base` with one scalar axis replaced.
pub fn with_axis(base: &ModelParams, axis: Axis, value: f64) -> ModelParams {
    let mut p = base.clone();
    let scalar = |v: f64| DMatrix::from_element(1, 1, v);
    match axis {
        Axis::Theta => p.theta = value,
        Axis::T => p.horizon_t = value,
        Axis::SigmaR => p.sigma_r = scalar(value),
        Axis::SigmaMu => p.sigma_mu = scalar(value),
        Axis::Kappa => p.kappa = scalar(value),
        Axis::Q0 => p.q0 = scalar(value),
    }
    p
}

/// One cell of a two-axis feasibility sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionCell {
    pub status: Status,
    pub reason: Reason,
    pub delta_psi: Option<f64>,
    pub t_explosion: Option<f64>,
    pub max_lambda: Option<f64>,
}

/// Two-axis sweep of verdicts, row-major with axis1 outermost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionGrid {
    pub axis1: String,
    pub values1: Vec<f64>,
    pub axis2: String,
    pub values2: Vec<f64>,
    pub cells: Vec<RegionCell>,
}

impl RegionGrid {
    pub fn cell(&self, i: usize, j: usize) -> &RegionCell {
        &self.cells[i * self.values2.len() + j]
    }
}

/// Evaluate a verdict per (axis1, axis2) cell; cells are independent and
/// evaluated in parallel, written to disjoint slots. Regime F uses
/// [`check_full`], everything else [`check_partial`].
pub fn region_sweep(
    base: &ModelParams,
    axis1: (Axis, &[f64]),
    axis2: (Axis, &[f64]),
    regime: Regime,
    steps: usize,
) -> Result<RegionGrid> {
    if base.dim_d != 1 {
        return Err(Error::NotOneDimensional(base.dim_d));
    }
    let (ax1, vals1) = axis1;
    let (ax2, vals2) = axis2;
    let indices: Vec<(usize, usize)> = (0..vals1.len())
        .flat_map(|i| (0..vals2.len()).map(move |j| (i, j)))
        .collect();
    let cells: Vec<RegionCell> = indices
        .par_iter()
        .map(|&(i, j)| {
            let p = with_axis(&with_axis(base, ax1, vals1[i]), ax2, vals2[j]);
            let verdict = match regime {
                Regime::F => check_full(&p, steps)?,
                _ => check_partial(&p, regime, steps)?,
            };
            Ok(RegionCell {
                status: verdict.status,
                reason: verdict.reason,
                delta_psi: verdict.details.delta_psi,
                t_explosion: verdict.details.t_explosion,
                max_lambda: verdict.details.max_lambda,
            })
        })
        .collect::<Result<_>>()?;
    Ok(RegionGrid {
        axis1: ax1.name().to_string(),
        values1: vals1.to_vec(),
        axis2: ax2.name().to_string(),
        values2: vals2.to_vec(),
        cells,
    })
}

/// Root-finding criterion for [`critical_value`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    /// Δ_ψ(param) = 0: the edge of "bounded for every horizon".
    DeltaZero,
    /// T^E(param) = T: explosion exactly at the configured horizon.
    ExplosionEqualsHorizon,
}

/// Bisection (to 1e−8 absolute) for the parameter value where the chosen
/// criterion changes sign. d = 1 only.
pub fn critical_value(
    base: &ModelParams,
    param: Axis,
    criterion: Criterion,
    bracket: (f64, f64),
) -> Result<f64> {
    if base.dim_d != 1 {
        return Err(Error::NotOneDimensional(base.dim_d));
    }
    let eval = |x: f64| -> Result<f64> {
        let p = with_axis(base, param, x);
        let psi = risk_coefficient(p.theta)?.psi;
        let diag = discriminant(&p, psi)?;
        Ok(match criterion {
            Criterion::DeltaZero => diag.delta_psi,
            Criterion::ExplosionEqualsHorizon => diag.explosion_time - base.horizon_t,
        })
    };
    let (mut lo, mut hi) = bracket;
    let f_lo = eval(lo)?;
    let f_hi = eval(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange { lo, hi });
    }
    while hi - lo > 1e-8 {
        let mid = 0.5 * (lo + hi);
        let f_mid = eval(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
