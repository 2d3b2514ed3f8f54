//! Shared fixtures for the integration suites.
#![allow(dead_code)]

use wellposed::model::{validate_params, ModelParams, RawParams};

/// T = 1, θ = 0.3, d = 1, σ_R = 0.25, σ_μ = 1, κ = 3, μ̄ = 0, m0 = 0,
/// q0 = 1/6: the baseline configuration used throughout.
pub fn baseline_raw() -> RawParams {
    toml::from_str(BASELINE_TOML).expect("baseline fixture parses")
}

pub fn baseline() -> ModelParams {
    validate_params(&baseline_raw()).expect("baseline fixture is valid")
}

pub const BASELINE_TOML: &str = r#"
horizon_T = 1.0
theta = 0.3
dim_d = 1
sigma_R = [[0.25]]
sigma_mu = [[1.0]]
kappa = [[3.0]]
mu_bar = [0.0]
m_bar0 = [0.0]
q_bar0 = [[0.16666666666666666]]
m0 = [0.0]
q0 = [[0.16666666666666666]]
"#;

pub const PSI03: f64 = 0.306_122_448_979_591_84;

// Derived anchors, frozen from the scalar closed forms evaluated in
// high-precision arithmetic.
pub const A0: f64 = 1.316_847_928_037_935_5;
pub const C0: f64 = 0.911_391_974_304_472_4;
pub const D00: f64 = 2.487_783_054_434_744;
pub const TE03: f64 = 3.197_404_275_272_357;
pub const TE05: f64 = 0.444_091_120_062_685_8;
pub const K_BASE: f64 = 0.561_050_690_654_021_5;
pub const C0H_BASE: f64 = 2.526_781_584_509_724;
pub const PARTIAL_BOUND: f64 = 8.422_605_281_699_08;
pub const LAMBDA_BASE: f64 = 0.219_474_654_672_989_25;
pub const THETA_DELTA0: f64 = 0.286_421_655_349_338_1;
pub const THETA_TE1: f64 = 0.371_302_495_451_620_7;
pub const SIGMA_R_DELTA0: f64 = 0.260_820_265_478_650_5;
pub const SIGMA_MU_DELTA0: f64 = 0.958_514_475_634_040_7;
pub const SIGMA_MU_TE1: f64 = 1.238_681_382_461_789;
pub const SIGMA_R_TE1: f64 = 0.201_827_526_868_243_7;
