//! The benchmark problem
//!
//! ```text
//! a(t, x)    = (t + 2)(x - 1)
//! sigma_k(t) = (e^{2t} + 2) / ((k + 1)^p sqrt(ln(k + 1)))
//! ```
//!
//! on `[0, 1.5]` with `x0 = 0.9`. The full norm is `gamma_p (e^{2t} + 2)` with
//! `gamma_p^2 = sum_k ((k + 1)^{2p} ln(k + 1))^{-1}`.

use serde::Serialize;

use super::{DecayProfile, Diffusion, SdeProblem};
use crate::error::{Result, SdeError};

const BENCH_HORIZON: f64 = 1.5;
const BENCH_X0: f64 = 0.9;
const GAMMA_REL_TOL: f64 = 1e-13;

/// Exponential integral `E1(x) = int_x^inf e^{-v} / v dv` for `x > 0`.
pub fn exp_integral_e1(x: f64) -> f64 {
    const EULER: f64 = 0.577_215_664_901_532_9;
    const EPS: f64 = 1e-17;
    assert!(x > 0.0, "E1 requires x > 0");
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut fact = 1.0;
        for k in 1..200 {
            fact *= -x / k as f64;
            let term = -fact / k as f64;
            sum += term;
            if term.abs() < sum.abs() * EPS {
                break;
            }
        }
        -x.ln() - EULER + sum
    } else {
        // modified Lentz on the continued fraction
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < EPS {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// `gamma_p^2` split into a partial sum and a certified tail bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaEstimate {
    pub gamma: f64,
    /// Point estimate of `gamma_p^2 = partial_sum + (tail_lower + tail_upper) / 2`.
    pub squared: f64,
    pub partial_sum: f64,
    pub tail_lower: f64,
    pub tail_upper: f64,
    /// Number of summed terms `K`.
    pub terms: u64,
}

impl GammaEstimate {
    /// Bracket `[lower, upper]` for `gamma_p` itself.
    pub fn bracket(&self) -> (f64, f64) {
        (
            (self.partial_sum + self.tail_lower).sqrt(),
            (self.partial_sum + self.tail_upper).sqrt(),
        )
    }
}

fn term(p: f64, k: f64) -> f64 {
    let y = k + 1.0;
    1.0 / (y.powf(2.0 * p) * y.ln())
}

/// `int_A^inf (x + 1)^{-2p} / ln(x + 1) dx`, which equals `E1((2p - 1) ln(A + 1))`.
fn tail_integral(p: f64, a: f64) -> f64 {
    exp_integral_e1((2.0 * p - 1.0) * (a + 1.0).ln())
}

/// `gamma_p = (sum_{k>=1} ((k+1)^{2p} ln(k+1))^{-1})^{1/2}`.
///
/// The summand is positive, decreasing and convex on `k >= 1`, so the tail
/// after `K` terms lies in
/// `[int_{K+1}^inf f + f(K+1)/2, int_{K+1/2}^inf f]`. `K` doubles until the
/// bracket half-width is within `rel_tol` of the total.
pub fn gamma_constant(p: f64, rel_tol: f64) -> Result<GammaEstimate> {
    gamma_constant_capped(p, rel_tol, 1 << 27)
}

fn gamma_constant_capped(p: f64, rel_tol: f64, max_terms: u64) -> Result<GammaEstimate> {
    if p.is_nan() || p <= 0.5 || !p.is_finite() {
        return Err(SdeError::InvalidExponent(p));
    }
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(SdeError::param(
            "rel_tol",
            format!("must lie in (0, 1), got {rel_tol}"),
        ));
    }
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut summed = 0u64;
    let mut target = 16u64;
    loop {
        for k in summed + 1..=target {
            // Neumaier summation
            let v = term(p, k as f64);
            let t = sum + v;
            if sum.abs() >= v.abs() {
                comp += (sum - t) + v;
            } else {
                comp += (v - t) + sum;
            }
            sum = t;
        }
        summed = target;
        let partial = sum + comp;
        let kf = summed as f64;
        let lower = tail_integral(p, kf + 1.0) + 0.5 * term(p, kf + 1.0);
        let upper = tail_integral(p, kf + 0.5);
        let half_width = 0.5 * (upper - lower).max(0.0);
        if half_width <= rel_tol * (partial + lower) {
            let squared = partial + 0.5 * (lower + upper);
            return Ok(GammaEstimate {
                gamma: squared.sqrt(),
                squared,
                partial_sum: partial,
                tail_lower: lower,
                tail_upper: upper,
                terms: summed,
            });
        }
        if target >= max_terms {
            return Err(SdeError::TailNotConverged {
                rel_tol,
                terms: summed,
            });
        }
        target *= 2;
    }
}

/// The benchmark problem on `[0, 1.5]` with `x0 = 0.9`.
///
/// `coord_cap` bounds the coordinates that can ever be evaluated. The decay
/// profile is `delta(k) = k^{1/2 - p}` with `c2 = e^{2T} + 2`.
pub fn benchmark_problem(p: f64, coord_cap: usize) -> Result<SdeProblem> {
    benchmark_problem_with(p, coord_cap, BENCH_HORIZON, BENCH_X0)
}

/// Benchmark coefficients with a different horizon or initial value.
pub fn benchmark_problem_with(
    p: f64,
    coord_cap: usize,
    horizon: f64,
    initial_value: f64,
) -> Result<SdeProblem> {
    if p.is_nan() || p <= 0.5 || !p.is_finite() {
        return Err(SdeError::InvalidExponent(p));
    }
    if coord_cap == 0 {
        return Err(SdeError::param("coord_cap", "must be at least 1"));
    }
    let gamma = gamma_constant(p, GAMMA_REL_TOL)?.gamma;
    let weights: Vec<f64> = (1..=coord_cap)
        .map(|k| {
            let y = k as f64 + 1.0;
            1.0 / (y.powf(p) * y.ln().sqrt())
        })
        .collect();
    let c2 = (2.0 * horizon).exp() + 2.0;
    let decay = DecayProfile::power(p - 0.5, c2)?;
    let time_factor = |t: f64| (2.0 * t).exp() + 2.0;
    Ok(SdeProblem::new(
        horizon,
        initial_value,
        |t, x| (t + 2.0) * (x - 1.0),
        Diffusion::separable(time_factor, weights),
        decay,
    )?
    .with_full_norm(move |t| gamma * time_factor(t)))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `int_x^inf e^{-v}/v dv` by composite Simpson on `v = x + s/(1-s)`.
    fn e1_quadrature(x: f64) -> f64 {
        let n = 200_000;
        let h = 1.0 / n as f64;
        let g = |s: f64| {
            if s >= 1.0 {
                return 0.0;
            }
            let v = x + s / (1.0 - s);
            (-v).exp() / v / (1.0 - s).powi(2)
        };
        let mut acc = g(0.0) + g(1.0);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * g(i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn e1_against_quadrature() {
        for &x in &[0.05, 0.3, 0.9, 1.0, 1.1, 2.5, 7.0, 20.0] {
            let a = exp_integral_e1(x);
            let b = e1_quadrature(x);
            assert!((a - b).abs() <= 1e-10 * b, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn gamma_large_p_dominated_by_first_term() {
        let est = gamma_constant(10.0, 1e-12).unwrap();
        let first = (2f64.powi(-20) / 2f64.ln()).sqrt();
        assert!(est.gamma > first);
        // second term (3^-20 / ln 3) is about 3e-3 of the first
        assert!((est.gamma - first) / first < 2e-3);
        let two = (2f64.powi(-20) / 2f64.ln() + 3f64.powi(-20) / 3f64.ln()).sqrt();
        assert!((est.gamma - two) / two < 1e-4);
    }

    #[test]
    fn gamma_point_estimate_inside_bracket() {
        for &p in &[0.6, 0.9, 2.0] {
            let est = gamma_constant(p, 1e-9).unwrap();
            let tail = est.squared - est.partial_sum;
            assert!(tail >= est.tail_lower && tail <= est.tail_upper);
            assert!(est.tail_upper - est.tail_lower <= 2e-9 * est.squared * 1.0001);
        }
    }

    #[test]
    fn gamma_rejects_bad_input() {
        assert_eq!(
            gamma_constant(0.5, 1e-6),
            Err(SdeError::InvalidExponent(0.5))
        );
        assert!(gamma_constant(0.9, 0.0).is_err());
        assert!(gamma_constant(0.9, 1.0).is_err());
        assert!(matches!(
            gamma_constant_capped(0.9, 1e-15, 1024),
            Err(SdeError::TailNotConverged { .. })
        ));
    }

    #[test]
    fn benchmark_coefficients() {
        let prob = benchmark_problem(0.9, 10).unwrap();
        assert_eq!(prob.horizon(), 1.5);
        assert_eq!(prob.initial_value(), 0.9);
        for p in [0.6, 0.9, 3.0] {
            assert_eq!(benchmark_problem(p, 4).unwrap().drift(0.0, 1.0), 0.0);
        }
        let s1 = prob.diffusion_coord(0.0, 1).unwrap();
        let expected = 3.0 / (2f64.powf(0.9) * 2f64.ln().sqrt());
        assert!((s1 - expected).abs() <= 1e-15 * expected);
        assert!(prob.diffusion_coord(0.0, 11).is_err());
        assert!(matches!(
            benchmark_problem(0.5, 10),
            Err(SdeError::InvalidExponent(_))
        ));
    }
}
