//! Monte Carlo estimation of the L2(Omega x [0,T]) error against a fine
//! reference driven by the same Brownian path.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::constants::{conditional_error_predictor, cost};
use crate::error::{Result, SdeError};
use crate::mesh::{EpsilonRule, Mesh};
use crate::model::{SdeProblem, TruncationRule};
use crate::solver::{CoarseTarget, CoupledSetup, Trajectory};
use crate::wiener::NoisePlan;

/// Relative tolerance of the cost-error lower-bound check.
pub const TREND_TOLERANCE: f64 = 0.15;

/// Composite Simpson estimate of `(int_0^T (coarse(t) - ref(t))^2 dt)^{1/2}`.
///
/// `reference` holds the reference at every coarse node and interval
/// midpoint, interleaved as `t_0, m_0, t_1, ..., t_k`.
pub fn simpson_l2_error(coarse: &Trajectory, reference: &[f64]) -> Result<f64> {
    let nodes = coarse.mesh().nodes();
    let k = coarse.mesh().intervals();
    if reference.len() != 2 * k + 1 {
        return Err(SdeError::Misaligned {
            blocks: reference.len(),
            intervals: 2 * k + 1,
        });
    }
    let x = coarse.values();
    let mut acc = 0.0;
    for j in 0..k {
        let dt = nodes[j + 1] - nodes[j];
        let left = x[j] - reference[2 * j];
        let mid = 0.5 * (x[j] + x[j + 1]) - reference[2 * j + 1];
        let right = x[j + 1] - reference[2 * j + 2];
        acc += dt / 6.0 * (left * left + 4.0 * mid * mid + right * right);
    }
    Ok(acc.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Equidistant,
    Adaptive,
}

/// One Monte Carlo error cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub n: usize,
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "K")]
    pub trajectories: usize,
    pub cost: u64,
    pub err_hat: f64,
    pub err_std: f64,
    pub predictor: f64,
    /// Root mean square of the nodal errors over nodes and trajectories.
    #[serde(skip)]
    pub nodal_rms: f64,
}

#[derive(Debug, Clone)]
pub struct MonteCarloConfig {
    pub problem: SdeProblem,
    pub method: Method,
    pub n: usize,
    pub coords: usize,
    pub trajectories: usize,
    pub ref_n: usize,
    pub w_ratio: f64,
    pub master_seed: u64,
    pub epsilon: EpsilonRule,
}

fn check_common(trajectories: usize, w_ratio: f64) -> Result<()> {
    if trajectories < 2 {
        return Err(SdeError::param(
            "K",
            "need at least 2 trajectories for a variance estimate",
        ));
    }
    if !(w_ratio >= 1.0 && w_ratio.is_finite()) {
        return Err(SdeError::param(
            "w_ratio",
            format!("must be at least 1, got {w_ratio}"),
        ));
    }
    Ok(())
}

fn check_scale(n: usize, ref_n: usize) -> Result<()> {
    if ref_n < 8 * n {
        return Err(SdeError::param(
            "ref_n",
            format!("must be at least 8 n = {}, got {ref_n}", 8 * n),
        ));
    }
    Ok(())
}

/// Reference truncation level `round(w_ratio * M)`.
pub fn reference_coords(coords: usize, w_ratio: f64) -> usize {
    ((w_ratio * coords as f64).round() as usize).max(coords)
}

/// Per-trajectory squared errors for one coarse target.
#[derive(Debug, Clone, Default)]
struct Samples {
    squared: Vec<f64>,
    nodal: Vec<f64>,
}

/// Runs `trajectories` coupled paths, all targets sharing each path, and
/// returns per-target squared Simpson errors in trajectory order.
fn sample_errors(
    problem: &SdeProblem,
    targets: &[(Mesh, usize)],
    ref_n: usize,
    ref_coords: usize,
    trajectories: usize,
    master_seed: u64,
) -> Result<Vec<Samples>> {
    let coarse: Vec<CoarseTarget> = targets
        .iter()
        .map(|(mesh, coords)| CoarseTarget {
            mesh: mesh.clone(),
            coords: *coords,
            query_times: mesh.with_midpoints(),
        })
        .collect();
    let setup = CoupledSetup::new(problem, coarse, ref_n, ref_coords)?;
    let per_path: Vec<Vec<(f64, f64)>> = (0..trajectories)
        .into_par_iter()
        .map(|l| {
            let plan = NoisePlan::new(master_seed, l as u64, ref_coords)?;
            setup
                .run(&plan)?
                .into_iter()
                .map(|out| {
                    let q = simpson_l2_error(&out.coarse, &out.reference_at_queries)?;
                    let values = out.coarse.values();
                    let nodal = values
                        .iter()
                        .zip(out.reference_at_queries.iter().step_by(2))
                        .map(|(x, r)| (x - r).powi(2))
                        .sum::<f64>()
                        / values.len() as f64;
                    Ok((q * q, nodal))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![Samples::default(); targets.len()];
    for row in per_path {
        for (s, (q, nodal)) in out.iter_mut().zip(row) {
            s.squared.push(q);
            s.nodal.push(nodal);
        }
    }
    Ok(out)
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn summarise(
    problem: &SdeProblem,
    n: usize,
    mesh: &Mesh,
    coords: usize,
    s: &Samples,
) -> Result<ErrorReport> {
    let k = s.squared.len();
    let (mean, var) = mean_var(&s.squared);
    let err_hat = mean.sqrt();
    // delta method: sd(sqrt(q)) ~ sd(q) / (2 sqrt(q))
    let err_std = if mean > 0.0 {
        (var / k as f64).sqrt() / (2.0 * err_hat)
    } else {
        0.0
    };
    let nodal_rms = (s.nodal.iter().sum::<f64>() / k as f64).sqrt();
    Ok(ErrorReport {
        n,
        k: mesh.intervals(),
        m: coords,
        trajectories: k,
        cost: cost(coords, mesh.intervals(), problem.is_sigma_zero()),
        err_hat,
        err_std,
        predictor: conditional_error_predictor(problem, mesh, coords)?,
        nodal_rms,
    })
}

/// Builds the method mesh for scheme parameter `n`.
pub fn method_mesh(
    problem: &SdeProblem,
    method: Method,
    n: usize,
    coords: usize,
    epsilon: EpsilonRule,
) -> Result<Mesh> {
    match method {
        Method::Equidistant => Mesh::equidistant(problem.horizon(), n),
        Method::Adaptive => Mesh::adaptive(problem, n, coords, epsilon),
    }
}

/// Monte Carlo error of one method against the coupled fine reference.
pub fn monte_carlo_error(config: &MonteCarloConfig) -> Result<ErrorReport> {
    check_common(config.trajectories, config.w_ratio)?;
    check_scale(config.n, config.ref_n)?;
    let problem = &config.problem;
    let mesh = method_mesh(
        problem,
        config.method,
        config.n,
        config.coords,
        config.epsilon,
    )?;
    let ref_coords = reference_coords(config.coords, config.w_ratio);
    let samples = sample_errors(
        problem,
        &[(mesh.clone(), config.coords)],
        config.ref_n,
        ref_coords,
        config.trajectories,
        config.master_seed,
    )?;
    summarise(problem, config.n, &mesh, config.coords, &samples[0])
}

/// Errors of one method over a grid of `n` at a fixed truncation level.
///
/// All grid points are driven by the same paths and the same reference, so
/// each entry equals the corresponding single [`monte_carlo_error`] run
/// whenever the fine meshes coincide, at a fraction of the cost.
pub fn convergence_study(grid: &[usize], config: &MonteCarloConfig) -> Result<Vec<ErrorReport>> {
    if grid.is_empty() {
        return Err(SdeError::param("grid", "must not be empty"));
    }
    check_common(config.trajectories, config.w_ratio)?;
    let problem = &config.problem;
    let mut targets = Vec::with_capacity(grid.len());
    for &n in grid {
        check_scale(n, config.ref_n)?;
        targets.push((
            method_mesh(problem, config.method, n, config.coords, config.epsilon)?,
            config.coords,
        ));
    }
    let samples = sample_errors(
        problem,
        &targets,
        config.ref_n,
        reference_coords(config.coords, config.w_ratio),
        config.trajectories,
        config.master_seed,
    )?;
    grid.iter()
        .zip(&targets)
        .zip(&samples)
        .map(|((&n, (mesh, coords)), s)| summarise(problem, n, mesh, *coords, s))
        .collect()
}

/// Settings shared by every cell of an improvement experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub problem: SdeProblem,
    pub trajectories: usize,
    pub ref_n: usize,
    pub w_ratio: f64,
    pub master_seed: u64,
    pub epsilon: EpsilonRule,
    pub truncation: TruncationRule,
}

/// One row of the adaptive-versus-equidistant comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImprovementRow {
    pub n: usize,
    pub k_star: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "K")]
    pub trajectories: usize,
    pub w_ratio: f64,
    pub ratio: f64,
    pub ratio_std: f64,
    #[serde(skip)]
    pub adaptive: ErrorReport,
    #[serde(skip)]
    pub equidistant: ErrorReport,
}

/// For each `n`: `M_n` from the truncation rule, the adaptive mesh with
/// `k*_n` intervals, and an equidistant mesh with the same `k*_n` intervals
/// (equal cost). Both schemes see the same Brownian paths and the same
/// reference; `ratio = err(adaptive) / err(equidistant)`.
pub fn improvement_experiment(
    grid: &[usize],
    config: &ExperimentConfig,
) -> Result<Vec<ImprovementRow>> {
    if grid.is_empty() {
        return Err(SdeError::param("grid", "must not be empty"));
    }
    check_common(config.trajectories, config.w_ratio)?;
    grid.iter().map(|&n| improvement_cell(n, config)).collect()
}

/// A single cell of [`improvement_experiment`].
pub fn improvement_cell(n: usize, config: &ExperimentConfig) -> Result<ImprovementRow> {
    check_common(config.trajectories, config.w_ratio)?;
    check_scale(n, config.ref_n)?;
    let problem = &config.problem;
    let coords = config.truncation.level(problem.decay(), n as u64)? as usize;
    let adaptive = Mesh::adaptive(problem, n, coords, config.epsilon)?;
    let k_star = adaptive.intervals();
    let equidistant = Mesh::equidistant(problem.horizon(), k_star)?;
    let ref_coords = reference_coords(coords, config.w_ratio);
    let samples = sample_errors(
        problem,
        &[(adaptive.clone(), coords), (equidistant.clone(), coords)],
        config.ref_n,
        ref_coords,
        config.trajectories,
        config.master_seed,
    )?;
    let rep_a = summarise(problem, n, &adaptive, coords, &samples[0])?;
    let rep_e = summarise(problem, n, &equidistant, coords, &samples[1])?;
    let (ratio, ratio_std) = ratio_with_std(&samples[0].squared, &samples[1].squared);
    Ok(ImprovementRow {
        n,
        k_star,
        m: coords,
        trajectories: config.trajectories,
        w_ratio: config.w_ratio,
        ratio,
        ratio_std,
        adaptive: rep_a,
        equidistant: rep_e,
    })
}

/// `sqrt(mean a / mean b)` with a delta-method standard error that keeps the
/// covariance induced by common random numbers.
fn ratio_with_std(a: &[f64], b: &[f64]) -> (f64, f64) {
    let k = a.len() as f64;
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let cov = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - ma) * (y - mb))
        .sum::<f64>()
        / (k - 1.0);
    let ratio = (ma / mb).sqrt();
    if !(ma > 0.0 && mb > 0.0) {
        return (ratio, 0.0);
    }
    let var_log = 0.25 * (va / (ma * ma) + vb / (mb * mb) - 2.0 * cov / (ma * mb)) / k;
    (ratio, ratio * var_log.max(0.0).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendDiagnostic {
    /// False when every cost is zero (no noise).
    pub applicable: bool,
    /// `sqrt(cost) * err_hat` per report.
    pub scaled: Vec<f64>,
    /// `scaled / sqrt(M)` per report.
    pub normalized: Vec<f64>,
    pub increasing: bool,
    /// Every normalized value is at least `(1 - tol) * constant`.
    pub above_bound: bool,
    pub constant: f64,
}

/// Checks that `sqrt(cost) * err` grows with `n` and that
/// `sqrt(cost) * err / sqrt(M)` stays above `(1 - tol) * constant`.
pub fn cost_error_trend(reports: &[ErrorReport], constant: f64) -> Result<TrendDiagnostic> {
    if reports.len() < 3 {
        return Err(SdeError::param("reports", "need at least 3 reports"));
    }
    let scaled: Vec<f64> = reports
        .iter()
        .map(|r| (r.cost as f64).sqrt() * r.err_hat)
        .collect();
    let normalized: Vec<f64> = reports
        .iter()
        .zip(&scaled)
        .map(|(r, s)| s / (r.m as f64).sqrt())
        .collect();
    let applicable = reports.iter().any(|r| r.cost > 0);
    let increasing = applicable && scaled.windows(2).all(|w| w[1] > w[0]);
    let above_bound = applicable
        && normalized
            .iter()
            .all(|&v| v >= (1.0 - TREND_TOLERANCE) * constant);
    Ok(TrendDiagnostic {
        applicable,
        scaled,
        normalized,
        increasing,
        above_bound,
        constant,
    })
}

/// Least-squares slope of `log2(y)` against `log2(x)`; `None` when any
/// value is non-positive.
pub fn log2_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() || x.iter().chain(y).any(|&v| v.is_nan() || v <= 0.0) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.log2()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.log2()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Some(sxy / sxx)
}
