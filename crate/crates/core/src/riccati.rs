//! Terminal-value ODE system for the exponential-quadratic moment
//! d(t, m) = exp{mᵀA(t)m + B(t)ᵀm + C(t)}.
//!
//! The matrix function A solves a Riccati equation backward from A(T) = 0,
//! B a linear system given A, and C a plain quadrature:
//!
//!   dA/dt = −2AΣ_μA + κᵀA + Aκ − ψΣ_R⁻¹
//!   dB/dt = −2Aκμ̄ + (κᵀ − 2AΣ_μ)B
//!   dC/dt = −½BᵀΣ_μB − Bᵀκμ̄ − tr(Σ_μA)
//!
//! For ψ > 0 the solution can blow up in finite backward time; blow-up is
//! detected (Frobenius-norm threshold plus a half-step Richardson error
//! check) and reported as data, not as an error: downstream feasibility
//! verdicts consume it. Solutions are stored forward-indexed on [0, T] even
//! though integration runs backward.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::ModelParams;

/// ‖A‖_F beyond this is treated as blown up.
pub const EXPLOSION_NORM: f64 = 1e8;
/// Relative disagreement between the full-step and half-step passes beyond
/// which integration stops.
pub const STEP_ERROR_TOL: f64 = 1e-3;
/// Default grid resolution per unit of horizon.
pub const DEFAULT_STEPS_PER_UNIT: f64 = 2000.0;
/// Minimum accepted step count.
pub const MIN_STEPS: usize = 100;

/// Default step count for a horizon of `t` years.
pub fn default_steps(t: f64) -> usize {
    ((DEFAULT_STEPS_PER_UNIT * t).ceil() as usize).max(MIN_STEPS)
}

/// Finite-backward-time blow-up record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Explosion {
    /// Forward time at which integration stopped (blow-up lies at t below
    /// the valid part of the grid; backward blow-up time is T − exploded_at).
    pub exploded_at: f64,
    /// Last finite ‖A‖_F observed.
    pub norm_at_stop: f64,
}

/// Grids of A, B, C on [0, T]. When an explosion was detected, values are
/// only stored for grid indices `first_valid()..`.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    grid: Vec<f64>,
    /// Values aligned with `grid[first_valid..]`.
    a: Vec<DMatrix<f64>>,
    b: Vec<DVector<f64>>,
    c: Vec<f64>,
    first_valid: usize,
    psi: f64,
    explosion: Option<Explosion>,
}

impl RiccatiSolution {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    pub fn explosion(&self) -> Option<&Explosion> {
        self.explosion.as_ref()
    }

    /// First grid index carrying a value (0 when no explosion).
    pub fn first_valid(&self) -> usize {
        self.first_valid
    }

    pub fn a_at(&self, index: usize) -> Option<&DMatrix<f64>> {
        index
            .checked_sub(self.first_valid)
            .and_then(|i| self.a.get(i))
    }

    pub fn b_at(&self, index: usize) -> Option<&DVector<f64>> {
        index
            .checked_sub(self.first_valid)
            .and_then(|i| self.b.get(i))
    }

    pub fn c_at(&self, index: usize) -> Option<f64> {
        index
            .checked_sub(self.first_valid)
            .and_then(|i| self.c.get(i))
            .copied()
    }

    /// Grid index of time `t`, or an error when `t` is off-grid.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let n = self.grid.len() - 1;
        let horizon = *self.grid.last().expect("non-empty grid");
        let h = horizon / n as f64;
        let idx = (t / h).round() as i64;
        if idx < 0 || idx as usize > n || (t - idx as f64 * h).abs() > 1e-9 * horizon.max(1.0) {
            return Err(Error::NotOnGrid { t });
        }
        Ok(idx as usize)
    }

    /// Largest ‖A‖_F over the stored grid values.
    pub fn max_a_norm(&self) -> f64 {
        self.a.iter().map(|m| m.norm()).fold(0.0, f64::max)
    }
}

struct Dynamics {
    kappa: DMatrix<f64>,
    kappa_t: DMatrix<f64>,
    kappa_mu_bar: DVector<f64>,
    cov_mu: DMatrix<f64>,
    psi_cov_r_inv: DMatrix<f64>,
}

#[derive(Clone)]
struct State {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: f64,
}

impl State {
    fn zero(d: usize) -> Self {
        State {
            a: DMatrix::zeros(d, d),
            b: DVector::zeros(d),
            c: 0.0,
        }
    }

    fn axpy(&self, h: f64, k: &State) -> State {
        State {
            a: &self.a + h * &k.a,
            b: &self.b + h * &k.b,
            c: self.c + h * k.c,
        }
    }

    fn finite(&self) -> bool {
        self.c.is_finite()
            && self.a.iter().all(|x| x.is_finite())
            && self.b.iter().all(|x| x.is_finite())
    }
}

impl Dynamics {
    fn new(params: &ModelParams, psi: f64) -> Result<Self> {
        let cov_r = params.cov_r();
        let cov_r_inv = cov_r
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NoConvergence("Sigma_R is numerically singular".into()))?;
        Ok(Dynamics {
            kappa: params.kappa.clone(),
            kappa_t: params.kappa.transpose(),
            kappa_mu_bar: &params.kappa * &params.mu_bar,
            cov_mu: params.cov_mu(),
            psi_cov_r_inv: psi * cov_r_inv,
        })
    }

    /// Right-hand side in backward time s = T − t.
    fn backward_rhs(&self, st: &State) -> State {
        let a_cov_mu = &st.a * &self.cov_mu;
        let da = 2.0 * &a_cov_mu * &st.a - &self.kappa_t * &st.a - &st.a * &self.kappa
            + &self.psi_cov_r_inv;
        let db = 2.0 * &st.a * &self.kappa_mu_bar - (&self.kappa_t - 2.0 * a_cov_mu) * &st.b;
        let dc = 0.5 * st.b.dot(&(&self.cov_mu * &st.b))
            + st.b.dot(&self.kappa_mu_bar)
            + (&self.cov_mu * &st.a).trace();
        State {
            a: da,
            b: db,
            c: dc,
        }
    }

    fn rk4_step(&self, st: &State, h: f64) -> State {
        let k1 = self.backward_rhs(st);
        let k2 = self.backward_rhs(&st.axpy(0.5 * h, &k1));
        let k3 = self.backward_rhs(&st.axpy(0.5 * h, &k2));
        let k4 = self.backward_rhs(&st.axpy(h, &k3));
        let mut next = State {
            a: &st.a + (h / 6.0) * (&k1.a + 2.0 * &k2.a + 2.0 * &k3.a + &k4.a),
            b: &st.b + (h / 6.0) * (&k1.b + 2.0 * &k2.b + 2.0 * &k3.b + &k4.b),
            c: st.c + (h / 6.0) * (k1.c + 2.0 * k2.c + 2.0 * k3.c + k4.c),
        };
        next.a = linalg::symmetrize(&next.a);
        next
    }
}

/// Integrate the A/B/C system backward from the zero terminal state on a
/// uniform grid of `steps` intervals. A half-step pass runs in lockstep: the
/// stored values come from it, and its disagreement with the full-step pass
/// is the local error estimate that, together with the norm threshold,
/// triggers explosion detection. ψ = 0 short-circuits to the zero solution
/// so log utility flows through the same path.
pub fn solve_abc(params: &ModelParams, psi: f64, steps: usize) -> Result<RiccatiSolution> {
    if steps < MIN_STEPS {
        return Err(Error::TooFewSteps {
            min: MIN_STEPS,
            got: steps,
        });
    }
    let d = params.dim_d;
    let horizon = params.horizon_t;
    let h = horizon / steps as f64;
    let grid: Vec<f64> = (0..=steps).map(|i| i as f64 * h).collect();

    if psi == 0.0 {
        return Ok(RiccatiSolution {
            grid,
            a: vec![DMatrix::zeros(d, d); steps + 1],
            b: vec![DVector::zeros(d); steps + 1],
            c: vec![0.0; steps + 1],
            first_valid: 0,
            psi,
            explosion: None,
        });
    }

    let dyn_ = Dynamics::new(params, psi)?;
    let mut coarse = State::zero(d);
    let mut fine = State::zero(d);
    // Backward-ordered storage (node j holds values at t = T − j·h).
    let mut acc_a = vec![fine.a.clone()];
    let mut acc_b = vec![fine.b.clone()];
    let mut acc_c = vec![fine.c];
    let mut explosion = None;
    let mut last_norm = 0.0;

    for j in 1..=steps {
        coarse = dyn_.rk4_step(&coarse, h);
        fine = dyn_.rk4_step(&fine, 0.5 * h);
        fine = dyn_.rk4_step(&fine, 0.5 * h);

        let mut bad = !coarse.finite() || !fine.finite();
        if !bad {
            let norm_c = coarse.a.norm();
            let norm_f = fine.a.norm();
            let rel = (&coarse.a - &fine.a).norm() / (1.0 + norm_f);
            bad = norm_c > EXPLOSION_NORM || norm_f > EXPLOSION_NORM || rel > STEP_ERROR_TOL;
            if !bad {
                last_norm = norm_f;
            }
        }
        if bad {
            explosion = Some(Explosion {
                exploded_at: horizon - j as f64 * h,
                norm_at_stop: if fine.finite() {
                    fine.a.norm()
                } else {
                    last_norm
                },
            });
            break;
        }
        acc_a.push(fine.a.clone());
        acc_b.push(fine.b.clone());
        acc_c.push(fine.c);
    }

    // Reverse into forward indexing; valid nodes occupy the tail of the grid.
    acc_a.reverse();
    acc_b.reverse();
    acc_c.reverse();
    let first_valid = steps + 1 - acc_a.len();
    Ok(RiccatiSolution {
        grid,
        a: acc_a,
        b: acc_b,
        c: acc_c,
        first_valid,
        psi,
        explosion,
    })
}

/// d(t, m) = exp{mᵀA(t)m + B(t)ᵀm + C(t)} at a grid point.
pub fn eval_d(sol: &RiccatiSolution, t: f64, m: &DVector<f64>) -> Result<f64> {
    let idx = sol.index_of(t)?;
    if idx < sol.first_valid() {
        let exploded_at = sol.explosion().map(|e| e.exploded_at).unwrap_or(f64::NAN);
        return Err(Error::ExplodedRegion { t, exploded_at });
    }
    let a = sol.a_at(idx).expect("index in valid range");
    let b = sol.b_at(idx).expect("index in valid range");
    let c = sol.c_at(idx).expect("index in valid range");
    Ok((m.dot(&(a * m)) + b.dot(m) + c).exp())
}

/// Scalar-case diagnostics: discriminant Δ_ψ, its half-root δ_ψ and the
/// explosion horizon T^E (infinite when Δ_ψ ≥ 0 or ψ ≤ 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneDimDiagnostics {
    pub delta_psi: f64,
    pub half_root: f64,
    pub explosion_time: f64,
}

/// Δ_ψ = 4κ²(1 − 2ψ(σ_μ/(κσ_R))²) together with δ_ψ and T^E. d = 1 only.
pub fn discriminant(params: &ModelParams, psi: f64) -> Result<OneDimDiagnostics> {
    let (kappa, var_mu, var_r) = params.scalar()?;
    let delta_psi = 4.0 * kappa * kappa * (1.0 - 2.0 * psi * var_mu / (kappa * kappa * var_r));
    let half_root = delta_psi.abs().sqrt() / 2.0;
    let explosion_time = if psi <= 0.0 || delta_psi >= 0.0 {
        f64::INFINITY
    } else {
        (std::f64::consts::FRAC_PI_2 + (kappa / half_root).atan()) / half_root
    };
    Ok(OneDimDiagnostics {
        delta_psi,
        half_root,
        explosion_time,
    })
}

/// T^E for d = 1: +∞ when ψ ≤ 0 or Δ_ψ ≥ 0, else finite.
pub fn explosion_time(params: &ModelParams, psi: f64) -> Result<f64> {
    Ok(discriminant(params, psi)?.explosion_time)
}

/// Closed-form scalar A at backward time s = T − t, by sign of Δ_ψ:
///
///   Δ_ψ < 0:  A(s) = (κ + δ tan(δs − arctan(κ/δ))) / (2σ_μ²),  s < T^E
///   Δ_ψ > 0:  A(s) = (ψ/σ_R²) tanh(δs) / (δ + κ tanh(δs))
///   Δ_ψ = 0:  A(s) = (ψ/σ_R²) s / (1 + κs)
///
/// Each branch solves dA/ds = 2σ_μ²A² − 2κA + ψ/σ_R², A(0) = 0; the
/// integrator in [`solve_abc`] serves as the cross-check oracle.
pub fn closed_form_a(params: &ModelParams, psi: f64, s: f64) -> Result<f64> {
    let (kappa, var_mu, var_r) = params.scalar()?;
    let diag = discriminant(params, psi)?;
    let delta = diag.half_root;
    if diag.delta_psi < 0.0 {
        if s >= diag.explosion_time {
            return Err(Error::BeyondExplosion {
                s,
                t_explosion: diag.explosion_time,
            });
        }
        let phase = delta * s - (kappa / delta).atan();
        Ok((kappa + delta * phase.tan()) / (2.0 * var_mu))
    } else if diag.delta_psi > 0.0 {
        let th = (delta * s).tanh();
        Ok(psi / var_r * th / (delta + kappa * th))
    } else {
        Ok(psi / var_r * s / (1.0 + kappa * s))
    }
}
