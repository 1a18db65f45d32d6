use serde::Serialize;

use super::quadrature::integrate;
use crate::error::{Result, SdeError};
use crate::mesh::Mesh;
use crate::model::SdeProblem;

const INTEGRAL_REL_TOL: f64 = 1e-8;

/// Informational cost: number of scalar Wiener evaluations `M * k`, or 0
/// for a problem without noise.
pub fn cost(coords: usize, intervals: usize, sigma_zero: bool) -> u64 {
    if sigma_zero {
        0
    } else {
        coords as u64 * intervals as u64
    }
}

/// `((1/6) sum_j ||sigma^M(t_j)||^2 dt_j^2)^{1/2}`: the L2(Omega x [0,T])
/// distance between the time-continuous Euler process and its conditional
/// expectation given the nodal Wiener values.
pub fn conditional_error_predictor(
    problem: &SdeProblem,
    mesh: &Mesh,
    coords: usize,
) -> Result<f64> {
    let mut acc = 0.0;
    for (t, dt) in mesh.nodes().iter().zip(mesh.steps()) {
        let norm = problem.diffusion_norm_truncated(*t, coords)?;
        acc += norm * norm * dt * dt;
    }
    Ok((acc / 6.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticConstants {
    /// `int_0^T ||sigma(t)|| dt`
    pub integral_norm: f64,
    /// `int_0^T ||sigma(t)||^2 dt`
    pub integral_norm_sq: f64,
    /// `(1/sqrt 6) int ||sigma||`
    pub c_noneq: f64,
    /// `sqrt(T/6) (int ||sigma||^2)^{1/2}`
    pub c_eq: f64,
    /// `c_noneq / c_eq`; NaN when `sigma == 0`.
    pub ratio: f64,
}

/// Limits of `sqrt(k) * error` on adaptive and equidistant meshes, from
/// Richardson-Simpson integrals of the full diffusion norm.
pub fn asymptotic_constants(
    problem: &SdeProblem,
    quad_points: usize,
) -> Result<AsymptoticConstants> {
    if quad_points < 64 {
        return Err(SdeError::param(
            "quad_points",
            format!("must be at least 64, got {quad_points}"),
        ));
    }
    if !problem.has_full_norm() {
        return Err(SdeError::MissingFullNorm);
    }
    let horizon = problem.horizon();
    let norm = |t: f64| problem.diffusion_norm_full(t).unwrap_or(0.0);
    let integral_norm = integrate(norm, 0.0, horizon, quad_points, INTEGRAL_REL_TOL)?;
    let integral_norm_sq = integrate(
        |t| norm(t).powi(2),
        0.0,
        horizon,
        quad_points,
        INTEGRAL_REL_TOL,
    )?;
    let c_noneq = integral_norm / 6f64.sqrt();
    let c_eq = (horizon / 6.0).sqrt() * integral_norm_sq.sqrt();
    Ok(AsymptoticConstants {
        integral_norm,
        integral_norm_sq,
        c_noneq,
        c_eq,
        ratio: c_noneq / c_eq,
    })
}

/// `int_0^T ||sigma(t)|| dt` by Richardson-Simpson.
pub fn integral_of_norm(problem: &SdeProblem) -> Result<f64> {
    if !problem.has_full_norm() {
        return Err(SdeError::MissingFullNorm);
    }
    let norm = |t: f64| problem.diffusion_norm_full(t).unwrap_or(0.0);
    integrate(norm, 0.0, problem.horizon(), 64, INTEGRAL_REL_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiemannGap {
    pub left_sum: f64,
    pub integral: f64,
    pub gap: f64,
    pub bound: f64,
    pub ok: bool,
}

/// Compares the left Riemann sum of `||sigma^M||` on `mesh` with the
/// integral of the full norm against `c2 T (max step + delta(M))`.
pub fn riemann_gap_check(problem: &SdeProblem, mesh: &Mesh, coords: usize) -> Result<RiemannGap> {
    let mut left_sum = 0.0;
    for (t, dt) in mesh.nodes().iter().zip(mesh.steps()) {
        left_sum += problem.diffusion_norm_truncated(*t, coords)? * dt;
    }
    let integral = integral_of_norm(problem)?;
    let gap = (left_sum - integral).abs();
    let decay = problem.decay();
    let bound =
        decay.c2() * problem.horizon() * (mesh.stats().max_step + decay.delta(coords as u64));
    Ok(RiemannGap {
        left_sum,
        integral,
        gap,
        bound,
        ok: gap <= bound,
    })
}
