//! Command-line front end: config ingestion, subcommand dispatch, CSV/JSON
//! emission and the exit-code contract.
//!
//! Exit codes: 0 on success, 1 when `check` returns NotGuaranteed (so shell
//! pipelines can gate on feasibility), 2 on any error. File outputs are
//! written atomically (temp file + rename).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Serialize;

use crate::bounds::{full_info_bound, partial_info_bound, BoundReport};
use crate::config::load_params;
use crate::error::{Error, Result};
use crate::filter::{covariance_path, Regime};
use crate::model::{risk_coefficient, ModelParams};
use crate::oracle::{mc_d_estimate, mc_expected_utility, mc_gauss_quad_exp, McEstimate};
use crate::riccati::{default_steps, eval_d, solve_abc};
use crate::verdict::{
    check_full, check_partial, region_sweep, Axis, RegionCell, RegionGrid, Status, Verdict,
};

#[derive(Debug, Parser)]
#[command(
    name = "wellposed",
    about = "Feasibility verdicts and value bounds for power-utility optimization under Gaussian drift",
    version
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    F,
    R,
    J,
    Z,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Regime {
        match r {
            RegimeArg::F => Regime::F,
            RegimeArg::R => Regime::R,
            RegimeArg::J => Regime::J,
            RegimeArg::Z => Regime::Z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleTarget {
    /// Exponential-quadratic moment d(0, m) against its analytic value.
    D,
    /// Gaussian quadratic-exponential expectation.
    Gauss,
    /// Expected utility of a constant strategy against the value bound.
    Utility,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Parameter file (TOML).
    #[arg(long)]
    pub params: PathBuf,
    /// Grid intervals for ODE integrations (default: 2000 per unit horizon).
    #[arg(long)]
    pub steps: Option<usize>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Output format; each subcommand has a natural default (verdicts and
    /// reports JSON, trajectories and sweeps CSV). `region` supports both.
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

/// Reject a format the subcommand cannot emit.
fn resolve_format(
    common: &CommonArgs,
    natural: OutputFormat,
    also: Option<OutputFormat>,
) -> Result<OutputFormat> {
    match common.format {
        None => Ok(natural),
        Some(f) if f == natural || Some(f) == also => Ok(f),
        Some(f) => Err(Error::Config(format!(
            "this subcommand cannot emit {f:?}; use {natural:?}"
        ))),
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Well-posedness verdict (JSON). Exit 1 when NotGuaranteed.
    Check {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = RegimeArg::F)]
        regime: RegimeArg,
    },
    /// Two-axis feasibility sweep (CSV: axis1,axis2,status,reason,delta_psi,T_E,max_lambda).
    Region {
        #[command(flatten)]
        common: CommonArgs,
        /// Axis spec name:lo:hi:count, inclusive endpoints.
        #[arg(long)]
        axis1: String,
        #[arg(long)]
        axis2: String,
        #[arg(long, value_enum, default_value_t = RegimeArg::F)]
        regime: RegimeArg,
    },
    /// Value-function upper bound (JSON).
    Bound {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = RegimeArg::F)]
        regime: RegimeArg,
    },
    /// A/B/C trajectories (CSV).
    Riccati {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Conditional covariance trajectory (CSV).
    Filter {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = RegimeArg::R)]
        regime: RegimeArg,
    },
    /// Monte Carlo oracle vs analytic value (JSON, PASS/FAIL at 3 stderr).
    Oracle {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        target: OracleTarget,
        /// Number of Monte Carlo paths/samples.
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        /// Time step for path simulation.
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Constant strategy for the utility target (d = 1).
        #[arg(long, default_value_t = 1.0)]
        pi: f64,
        /// Quadratic coefficient for the gauss target (d = 1 instance).
        #[arg(long, default_value_t = 0.25)]
        u: f64,
        /// Evaluation point for the d target; defaults to m0.
        #[arg(long)]
        m: Option<f64>,
    },
}

/// Write atomically: temp file in the target directory, then rename.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn emit(output: Option<&PathBuf>, contents: &str) -> Result<()> {
    match output {
        Some(path) => write_atomic(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("serialization: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Parse `name:lo:hi:count` with inclusive endpoints.
pub fn parse_axis(spec: &str) -> Result<(Axis, Vec<f64>)> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 4 {
        return Err(Error::Config(format!(
            "axis spec `{spec}` must be name:lo:hi:count"
        )));
    }
    let axis: Axis = parts[0].parse()?;
    let bad = |what| Error::Config(format!("axis spec `{spec}`: invalid {what}"));
    let lo: f64 = parts[1].parse().map_err(|_| bad("lo"))?;
    let hi: f64 = parts[2].parse().map_err(|_| bad("hi"))?;
    let count: usize = parts[3].parse().map_err(|_| bad("count"))?;
    if count == 0 {
        return Err(bad("count"));
    }
    let values = if count == 1 {
        vec![lo]
    } else {
        (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect()
    };
    Ok((axis, values))
}

fn resolve_steps(common: &CommonArgs, params: &ModelParams) -> usize {
    common
        .steps
        .unwrap_or_else(|| default_steps(params.horizon_t))
}

/// Serialize a region grid as CSV, cells row-major (axis1 outer).
pub fn region_to_csv(grid: &RegionGrid) -> Result<String> {
    #[derive(Serialize)]
    struct Row {
        axis1: f64,
        axis2: f64,
        status: Status,
        reason: crate::verdict::Reason,
        delta_psi: Option<f64>,
        #[serde(rename = "T_E")]
        t_explosion: Option<f64>,
        max_lambda: Option<f64>,
    }
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for (i, &v1) in grid.values1.iter().enumerate() {
        for (j, &v2) in grid.values2.iter().enumerate() {
            let cell = grid.cell(i, j);
            wtr.serialize(Row {
                axis1: v1,
                axis2: v2,
                status: cell.status,
                reason: cell.reason,
                delta_psi: cell.delta_psi,
                t_explosion: cell.t_explosion,
                max_lambda: cell.max_lambda,
            })
            .map_err(|e| Error::Config(format!("csv: {e}")))?;
        }
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| Error::Config(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Config(format!("csv: {e}")))
}

/// Re-read a region CSV produced by [`region_to_csv`]. Axis names are not
/// stored in the file; pass them back in.
pub fn region_from_csv(text: &str, axis1: Axis, axis2: Axis) -> Result<RegionGrid> {
    #[derive(serde::Deserialize)]
    struct Row {
        axis1: f64,
        axis2: f64,
        status: Status,
        reason: crate::verdict::Reason,
        delta_psi: Option<f64>,
        #[serde(rename = "T_E")]
        t_explosion: Option<f64>,
        max_lambda: Option<f64>,
    }
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut values1: Vec<f64> = Vec::new();
    let mut values2: Vec<f64> = Vec::new();
    let mut cells = Vec::new();
    for row in rdr.deserialize() {
        let row: Row = row.map_err(|e| Error::Config(format!("csv: {e}")))?;
        if values1.last() != Some(&row.axis1) {
            values1.push(row.axis1);
        }
        if values1.len() == 1 {
            values2.push(row.axis2);
        }
        cells.push(RegionCell {
            status: row.status,
            reason: row.reason,
            delta_psi: row.delta_psi,
            t_explosion: row.t_explosion,
            max_lambda: row.max_lambda,
        });
    }
    if values1.len() * values2.len() != cells.len() {
        return Err(Error::Config("csv: ragged region grid".into()));
    }
    Ok(RegionGrid {
        axis1: axis1.name().to_string(),
        values1,
        axis2: axis2.name().to_string(),
        values2,
        cells,
    })
}

fn riccati_csv(params: &ModelParams, steps: usize) -> Result<String> {
    let psi = risk_coefficient(params.theta)?.psi;
    let sol = solve_abc(params, psi, steps)?;
    let d = params.dim_d;
    let mut out = String::from("t");
    for i in 1..=d {
        for j in 1..=d {
            write!(out, ",A_{i}{j}").unwrap();
        }
    }
    for i in 1..=d {
        write!(out, ",B_{i}").unwrap();
    }
    out.push_str(",C\n");
    for idx in sol.first_valid()..sol.grid().len() {
        let a = sol.a_at(idx).expect("valid index");
        let b = sol.b_at(idx).expect("valid index");
        let c = sol.c_at(idx).expect("valid index");
        write!(out, "{}", sol.grid()[idx]).unwrap();
        for i in 0..d {
            for j in 0..d {
                write!(out, ",{}", a[(i, j)]).unwrap();
            }
        }
        for i in 0..d {
            write!(out, ",{}", b[i]).unwrap();
        }
        writeln!(out, ",{c}").unwrap();
    }
    Ok(out)
}

fn filter_csv(params: &ModelParams, regime: Regime, steps: usize) -> Result<String> {
    let path = covariance_path(params, regime, steps)?;
    let d = params.dim_d;
    let mut out = String::from("t");
    for i in 1..=d {
        for j in 1..=d {
            write!(out, ",Q_{i}{j}").unwrap();
        }
    }
    out.push_str(",jump\n");
    let mut write_row = |t: f64, q: &nalgebra::DMatrix<f64>, jump: &str| {
        write!(out, "{t}").unwrap();
        for i in 0..d {
            for j in 0..d {
                write!(out, ",{}", q[(i, j)]).unwrap();
            }
        }
        writeln!(out, ",{jump}").unwrap();
    };
    for (idx, &t) in path.grid.iter().enumerate() {
        if path.jumps().iter().any(|j| j.index == idx) {
            write_row(t, path.left_limit_at(idx), "minus");
            write_row(t, path.q_at(idx), "plus");
        } else {
            write_row(t, path.q_at(idx), "");
        }
    }
    Ok(out)
}

fn bound_report(params: &ModelParams, regime: Regime, steps: usize) -> Result<BoundReport> {
    let psi = risk_coefficient(params.theta)?.psi;
    let sol = solve_abc(params, psi, steps)?;
    match regime {
        // The fully informed benchmark evaluates the bound at the known
        // initial drift; the configured m0 stands in for it.
        Regime::F => full_info_bound(params, &sol, &params.m0),
        _ => partial_info_bound(params, &sol, &params.m0, &params.q0, regime),
    }
}

#[derive(Serialize)]
struct OracleReport {
    target: String,
    estimate: McEstimate,
    analytic: f64,
    /// |mean − analytic| in stderr units (two-sided targets only).
    z_score: Option<f64>,
    comparison: String,
    verdict: String,
}

struct OracleKnobs {
    n: usize,
    dt: f64,
    seed: u64,
    pi: f64,
    u: f64,
    m: Option<f64>,
}

fn oracle_report(
    params: &ModelParams,
    target: OracleTarget,
    knobs: &OracleKnobs,
) -> Result<OracleReport> {
    let OracleKnobs {
        n,
        dt,
        seed,
        pi,
        u,
        m,
    } = *knobs;
    match target {
        OracleTarget::D => {
            let psi = risk_coefficient(params.theta)?.psi;
            let m_vec = match m {
                Some(v) => DVector::from_element(params.dim_d, v),
                None => params.m0.clone(),
            };
            let steps = default_steps(params.horizon_t);
            let sol = solve_abc(params, psi, steps)?;
            let analytic = eval_d(&sol, 0.0, &m_vec)?;
            let est = mc_d_estimate(params, psi, &m_vec, dt, n, seed)?;
            let z = if est.stderr > 0.0 {
                (est.mean - analytic).abs() / est.stderr
            } else if est.mean == analytic {
                0.0
            } else {
                f64::INFINITY
            };
            Ok(OracleReport {
                target: "d".into(),
                estimate: est,
                analytic,
                z_score: Some(z),
                comparison: "two-sided, 3 stderr".into(),
                verdict: if z <= 3.0 { "PASS" } else { "FAIL" }.into(),
            })
        }
        OracleTarget::Gauss => {
            let d = params.dim_d;
            let mu_y = DVector::zeros(d);
            let sigma_y = nalgebra::DMatrix::identity(d, d);
            let u_mat = nalgebra::DMatrix::identity(d, d) * u;
            let b = DVector::zeros(d);
            let analytic =
                crate::bounds::gaussian_quad_exp_expectation(&mu_y, &sigma_y, &u_mat, &b)?;
            let est = mc_gauss_quad_exp(&mu_y, &sigma_y, &u_mat, &b, n, seed)?;
            let z = (est.mean - analytic).abs() / est.stderr;
            Ok(OracleReport {
                target: "gauss".into(),
                estimate: est,
                analytic,
                z_score: Some(z),
                comparison: "two-sided, 3 stderr".into(),
                verdict: if z <= 3.0 { "PASS" } else { "FAIL" }.into(),
            })
        }
        OracleTarget::Utility => {
            let pi_vec = DVector::from_element(params.dim_d, pi);
            let report = bound_report(params, Regime::R, default_steps(params.horizon_t))?;
            let bound = report.bound.value().ok_or(Error::LogUtility)?;
            let est = mc_expected_utility(params, &pi_vec, dt, n, seed)?;
            let pass = est.mean <= bound + 3.0 * est.stderr;
            Ok(OracleReport {
                target: "utility".into(),
                estimate: est,
                analytic: bound,
                z_score: None,
                comparison: "one-sided dominance, 3 stderr".into(),
                verdict: if pass { "PASS" } else { "FAIL" }.into(),
            })
        }
    }
}

/// Run one subcommand; returns the process exit code.
pub fn dispatch(cfg: &RunConfig) -> Result<i32> {
    match &cfg.command {
        Command::Check { common, regime } => {
            resolve_format(common, OutputFormat::Json, None)?;
            let params = load_params(&common.params)?;
            let steps = resolve_steps(common, &params);
            let verdict: Verdict = match Regime::from(*regime) {
                Regime::F => check_full(&params, steps)?,
                r => check_partial(&params, r, steps)?,
            };
            emit(common.output.as_ref(), &to_json(&verdict)?)?;
            Ok(if verdict.status == Status::WellPosed {
                0
            } else {
                1
            })
        }
        Command::Region {
            common,
            axis1,
            axis2,
            regime,
        } => {
            let params = load_params(&common.params)?;
            let steps = resolve_steps(common, &params);
            let (ax1, vals1) = parse_axis(axis1)?;
            let (ax2, vals2) = parse_axis(axis2)?;
            let grid = region_sweep(
                &params,
                (ax1, &vals1),
                (ax2, &vals2),
                Regime::from(*regime),
                steps,
            )?;
            let rendered =
                match resolve_format(common, OutputFormat::Csv, Some(OutputFormat::Json))? {
                    OutputFormat::Csv => region_to_csv(&grid)?,
                    OutputFormat::Json => to_json(&grid)?,
                };
            emit(common.output.as_ref(), &rendered)?;
            Ok(0)
        }
        Command::Bound { common, regime } => {
            resolve_format(common, OutputFormat::Json, None)?;
            let params = load_params(&common.params)?;
            let steps = resolve_steps(common, &params);
            let report = bound_report(&params, Regime::from(*regime), steps)?;
            emit(common.output.as_ref(), &to_json(&report)?)?;
            Ok(0)
        }
        Command::Riccati { common } => {
            resolve_format(common, OutputFormat::Csv, None)?;
            let params = load_params(&common.params)?;
            let steps = resolve_steps(common, &params);
            emit(common.output.as_ref(), &riccati_csv(&params, steps)?)?;
            Ok(0)
        }
        Command::Filter { common, regime } => {
            resolve_format(common, OutputFormat::Csv, None)?;
            let params = load_params(&common.params)?;
            let steps = resolve_steps(common, &params);
            emit(
                common.output.as_ref(),
                &filter_csv(&params, Regime::from(*regime), steps)?,
            )?;
            Ok(0)
        }
        Command::Oracle {
            common,
            target,
            n,
            dt,
            seed,
            pi,
            u,
            m,
        } => {
            resolve_format(common, OutputFormat::Json, None)?;
            let params = load_params(&common.params)?;
            let knobs = OracleKnobs {
                n: *n,
                dt: *dt,
                seed: *seed,
                pi: *pi,
                u: *u,
                m: *m,
            };
            let report = oracle_report(&params, *target, &knobs)?;
            emit(common.output.as_ref(), &to_json(&report)?)?;
            Ok(0)
        }
    }
}
