//! Monte Carlo oracles validating the analytic machinery at desk scale.
//!
//! Drift paths use the exact Ornstein–Uhlenbeck transition
//! μ' = μ̄ + e^{−κ dt}(μ − μ̄) + η, η ~ N(0, V_dt) with
//! V_dt = V_∞ − e^{−κ dt}V_∞e^{−κᵀdt}, so the only discretization bias left
//! in the d(t, m) oracle is the time quadrature of the integrand.
//!
//! Reproducibility contract: paths are simulated in fixed batches of
//! [`BATCH_SIZE`]; batch k draws from its own ChaCha stream seeded with
//! `seed ^ k`. Results are therefore bit-identical for a given
//! (seed, n, dt) regardless of thread count; reduction uses pairwise
//! summation in batch order.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, pairwise_sum};
use crate::model::ModelParams;

/// Paths per RNG stream.
pub const BATCH_SIZE: usize = 8192;

/// A Monte Carlo mean with its standard error and the inputs that
/// reproduce it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
}

fn estimate_from(values: &[f64], dt: f64, seed: u64) -> McEstimate {
    let n = values.len();
    let mean = pairwise_sum(values) / n as f64;
    let stderr = if n < 2 {
        0.0
    } else {
        let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        (pairwise_sum(&sq) / (n - 1) as f64).sqrt() / (n as f64).sqrt()
    };
    McEstimate {
        mean,
        stderr,
        n_paths: n,
        dt,
        seed,
    }
}

/// Fill `values` batch-by-batch, each batch from its own stream.
fn run_batches<F>(values: &mut [f64], seed: u64, body: F)
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    values
        .par_chunks_mut(BATCH_SIZE)
        .enumerate()
        .for_each(|(k, chunk)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ k as u64);
            body(&mut rng, chunk);
        });
}

struct Scratch {
    z: DVector<f64>,
    tmp: DVector<f64>,
}

impl Scratch {
    fn new(dim: usize) -> Self {
        Scratch {
            z: DVector::zeros(dim),
            tmp: DVector::zeros(dim),
        }
    }
}

/// Exact one-step OU transition for a fixed dt.
pub struct OuTransition {
    decay: DMatrix<f64>,
    noise_sqrt: DMatrix<f64>,
    mu_bar: DVector<f64>,
    dim: usize,
}

impl OuTransition {
    pub fn new(params: &ModelParams, dt: f64) -> Result<Self> {
        let kappa_dt = -&params.kappa * dt;
        let decay = kappa_dt.exp();
        let cov_mu = params.cov_mu();
        let noise_cov = if cov_mu.norm() == 0.0 {
            DMatrix::zeros(params.dim_d, params.dim_d)
        } else {
            let v_inf = linalg::solve_lyapunov(&params.kappa, &cov_mu)?;
            linalg::symmetrize(&(&v_inf - &decay * &v_inf * decay.transpose()))
        };
        let noise_sqrt = linalg::sqrt_psd(&noise_cov, 1e-12 * (1.0 + noise_cov.norm()))?;
        Ok(OuTransition {
            decay,
            noise_sqrt,
            mu_bar: params.mu_bar.clone(),
            dim: params.dim_d,
        })
    }

    /// Conditional mean factor e^{−κ dt}.
    pub fn decay(&self) -> &DMatrix<f64> {
        &self.decay
    }

    /// Conditional covariance of one step, V_dt.
    pub fn noise_cov(&self) -> DMatrix<f64> {
        &self.noise_sqrt * self.noise_sqrt.transpose()
    }

    /// One exact transition step.
    pub fn step(&self, mu: &DVector<f64>, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let mut out = mu.clone();
        let mut scratch = Scratch::new(self.dim);
        self.step_in_place(&mut out, &mut scratch, rng);
        out
    }

    /// Allocation-free variant for hot Monte Carlo loops.
    fn step_in_place(&self, mu: &mut DVector<f64>, s: &mut Scratch, rng: &mut ChaCha8Rng) {
        for z in s.z.iter_mut() {
            *z = rng.sample(StandardNormal);
        }
        *mu -= &self.mu_bar;
        s.tmp.gemv(1.0, &self.decay, mu, 0.0);
        s.tmp.gemv(1.0, &self.noise_sqrt, &s.z, 1.0);
        mu.copy_from(&s.tmp);
        *mu += &self.mu_bar;
    }
}

/// One exact-discretization drift path from μ(0) = mu0, n_steps steps of dt;
/// deterministic given the seed.
pub fn simulate_ou(
    params: &ModelParams,
    mu0: &DVector<f64>,
    dt: f64,
    n_steps: usize,
    seed: u64,
) -> Result<Vec<DVector<f64>>> {
    let trans = OuTransition::new(params, dt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut path = Vec::with_capacity(n_steps + 1);
    path.push(mu0.clone());
    let mut mu = mu0.clone();
    for _ in 0..n_steps {
        mu = trans.step(&mu, &mut rng);
        path.push(mu.clone());
    }
    Ok(path)
}

fn steps_for(horizon: f64, dt: f64) -> (usize, f64) {
    let n = ((horizon / dt).round() as usize).max(1);
    (n, horizon / n as f64)
}

/// Monte Carlo estimate of d(0, m) = E[exp{ψ∫₀ᵀ μᵀΣ_R⁻¹μ du}] with the
/// integral taken by the trapezoidal rule along each exact-step path.
pub fn mc_d_estimate(
    params: &ModelParams,
    psi: f64,
    m: &DVector<f64>,
    dt: f64,
    n_paths: usize,
    seed: u64,
) -> Result<McEstimate> {
    let (n_steps, dt_eff) = steps_for(params.horizon_t, dt);
    let trans = OuTransition::new(params, dt_eff)?;
    let cov_r_inv = params
        .cov_r()
        .try_inverse()
        .ok_or_else(|| Error::NoConvergence("Sigma_R is numerically singular".into()))?;
    let d = params.dim_d;

    let mut values = vec![0.0; n_paths];
    run_batches(&mut values, seed, |rng, chunk| {
        let mut s = Scratch::new(d);
        let mut quad_tmp = DVector::zeros(d);
        let quad = |mu: &DVector<f64>, quad_tmp: &mut DVector<f64>| {
            quad_tmp.gemv(1.0, &cov_r_inv, mu, 0.0);
            mu.dot(quad_tmp)
        };
        let mut mu = m.clone();
        for v in chunk.iter_mut() {
            mu.copy_from(m);
            let mut acc = 0.5 * quad(&mu, &mut quad_tmp);
            for step in 0..n_steps {
                trans.step_in_place(&mut mu, &mut s, rng);
                let weight = if step + 1 == n_steps { 0.5 } else { 1.0 };
                acc += weight * quad(&mu, &mut quad_tmp);
            }
            *v = (psi * acc * dt_eff).exp();
        }
    });
    Ok(estimate_from(&values, dt_eff, seed))
}

/// Monte Carlo estimate of E[exp{(Y+b)ᵀU(Y+b)}], Y ~ N(μ_Y, Σ_Y).
pub fn mc_gauss_quad_exp(
    mu_y: &DVector<f64>,
    sigma_y: &DMatrix<f64>,
    u: &DMatrix<f64>,
    b: &DVector<f64>,
    n: usize,
    seed: u64,
) -> Result<McEstimate> {
    let sqrt = linalg::sqrt_psd(&linalg::symmetrize(sigma_y), 1e-10)?;
    let d = mu_y.len();
    let mut values = vec![0.0; n];
    run_batches(&mut values, seed, |rng, chunk| {
        for v in chunk.iter_mut() {
            let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let y = mu_y + &sqrt * z + b;
            *v = y.dot(&(u * &y)).exp();
        }
    });
    Ok(estimate_from(&values, 0.0, seed))
}

/// Monte Carlo estimate of E[U_θ(X_T)] for a constant strategy π, with the
/// initial drift drawn per path from the prior N(m0, q0). With π constant
/// the wealth SDE integrates exactly given the drift path:
/// log X_T = ∫πᵀμ dt − ½πᵀΣ_Rπ·T + √(πᵀΣ_Rπ·T)·Z.
pub fn mc_expected_utility(
    params: &ModelParams,
    pi: &DVector<f64>,
    dt: f64,
    n_paths: usize,
    seed: u64,
) -> Result<McEstimate> {
    if params.theta == 0.0 {
        return Err(Error::LogUtility);
    }
    let theta = params.theta;
    let (n_steps, dt_eff) = steps_for(params.horizon_t, dt);
    let trans = OuTransition::new(params, dt_eff)?;
    let q0_sqrt = linalg::sqrt_psd(&params.q0, 1e-10 * (1.0 + params.q0.norm()))?;
    let pi_var = pi.dot(&(params.cov_r() * pi)) * params.horizon_t;
    let pi_vol = pi_var.sqrt();
    let d = params.dim_d;
    let x0 = params.x0;
    let m0 = params.m0.clone();

    let mut values = vec![0.0; n_paths];
    run_batches(&mut values, seed, |rng, chunk| {
        let mut s = Scratch::new(d);
        let mut mu = m0.clone();
        for v in chunk.iter_mut() {
            for z in s.z.iter_mut() {
                *z = rng.sample(StandardNormal);
            }
            mu.copy_from(&m0);
            mu.gemv(1.0, &q0_sqrt, &s.z, 1.0);
            let mut acc = 0.5 * pi.dot(&mu);
            for step in 0..n_steps {
                trans.step_in_place(&mut mu, &mut s, rng);
                let weight = if step + 1 == n_steps { 0.5 } else { 1.0 };
                acc += weight * pi.dot(&mu);
            }
            let z: f64 = rng.sample(StandardNormal);
            let log_x = acc * dt_eff - 0.5 * pi_var + pi_vol * z;
            *v = (x0 * log_x.exp()).powf(theta) / theta;
        }
    });
    Ok(estimate_from(&values, dt_eff, seed))
}
