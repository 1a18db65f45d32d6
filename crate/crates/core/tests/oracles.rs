//! Independent reference computations for derived values.

use sde_trunc::analysis::{
    asymptotic_constants, composite_simpson, conditional_error_predictor, cost, riemann_gap_check,
};
use sde_trunc::mesh::Mesh;
use sde_trunc::model::{
    benchmark_problem, exp_integral_e1, gamma_constant, DecayProfile, TruncationRule,
};

const T: f64 = 1.5;

fn term(k: f64, p: f64) -> f64 {
    let y = k + 1.0;
    1.0 / (y.powf(2.0 * p) * y.ln())
}

/// Direct sum to `terms`, then the midpoint-corrected tail
/// `int_{terms+1/2}^inf` written as `int_L^inf e^{(1-2p) y} / y dy` and
/// integrated by plain Simpson on a long finite window.
fn gamma_squared_oracle(p: f64, terms: usize) -> f64 {
    let mut head = 0.0;
    for k in (1..=terms).rev() {
        head += term(k as f64, p);
    }
    let lower = (terms as f64 + 1.5).ln();
    let rate = 2.0 * p - 1.0;
    let upper = lower + 60.0 / rate;
    let tail = composite_simpson(|y| (-rate * y).exp() / y, lower, upper, 200_000);
    head + tail
}

#[test]
fn gamma_matches_brute_force_sum() {
    for p in [0.9, 1.3, 2.0] {
        let est = gamma_constant(p, 1e-13).unwrap();
        let oracle = gamma_squared_oracle(p, 2_000_000);
        assert!(
            (est.squared - oracle).abs() <= 1e-10 * oracle,
            "p = {p}: {} vs {oracle}",
            est.squared
        );
        let (lo, hi) = est.bracket();
        assert!(lo <= est.gamma && est.gamma <= hi);
        assert!((est.gamma * est.gamma - est.squared).abs() <= 1e-15 * est.squared);
    }
}

#[test]
fn benchmark_gamma_value() {
    let est = gamma_constant(0.9, 1e-13).unwrap();
    assert!((est.gamma - 0.869_706_179_919_01).abs() < 1e-12);
    // the commonly quoted 0.75638883 is the sum itself, not its square root
    assert!((est.squared - 0.756_388_83).abs() < 1e-8);
}

#[test]
fn e1_tail_identity() {
    // int_A^inf (x+1)^{-2p} / ln(x+1) dx = E1((2p-1) ln(A+1))
    let p = 0.9;
    let a = 10.0;
    let lower = (a + 1.0f64).ln();
    let rate = 2.0 * p - 1.0;
    let direct = composite_simpson(
        |y| (-rate * y).exp() / y,
        lower,
        lower + 80.0 / rate,
        400_000,
    );
    let e1 = exp_integral_e1(rate * lower);
    assert!((direct - e1).abs() <= 1e-11 * e1);
}

#[test]
fn constants_match_closed_forms() {
    let problem = benchmark_problem(0.9, 8).unwrap();
    let gamma = gamma_constant(0.9, 1e-13).unwrap().gamma;
    let c = asymptotic_constants(&problem, 64).unwrap();
    let noneq = (1.0f64 / 6.0).sqrt() * (0.5 * (2.0 * T).exp() - 0.5 + 2.0 * T) * gamma;
    let eq = (T / 6.0).sqrt()
        * (0.25 * (4.0 * T).exp() + 2.0 * (2.0 * T).exp() - 2.25 + 4.0 * T).sqrt()
        * gamma;
    assert!((c.c_noneq - noneq).abs() <= 1e-8 * noneq);
    assert!((c.c_eq - eq).abs() <= 1e-8 * eq);
    assert!((c.ratio - noneq / eq).abs() <= 1e-8);
    assert!((c.ratio - 0.851_130_357_802_321_4).abs() < 1e-8);
}

#[test]
fn truncation_levels_for_benchmark() {
    let problem = benchmark_problem(0.9, 1).unwrap();
    let rule = TruncationRule::default();
    let levels: Vec<u64> = [1000, 2000, 5000, 10000]
        .iter()
        .map(|&n| rule.level(problem.decay(), n).unwrap())
        .collect();
    assert_eq!(levels, vec![1037, 2520, 8142, 19773]);
}

#[test]
fn cost_of_largest_reference_cell() {
    assert_eq!(cost(1037, 7832, false), 8_121_784);
}

#[test]
fn equidistant_predictor_structure() {
    let problem = benchmark_problem(0.9, 64).unwrap();
    for n in [5, 37, 128] {
        let mesh = Mesh::equidistant(T, n).unwrap();
        let h = T / n as f64;
        let sum: f64 = (0..n)
            .map(|j| {
                problem
                    .diffusion_norm_truncated(mesh.nodes()[j], 64)
                    .unwrap()
                    .powi(2)
                    * h
            })
            .sum();
        let expected = (T / (6.0 * n as f64)).sqrt() * sum.sqrt();
        let got = conditional_error_predictor(&problem, &mesh, 64).unwrap();
        assert!((got - expected).abs() <= 1e-12 * expected);
    }
}

#[test]
fn riemann_gap_examples() {
    let problem = benchmark_problem(0.9, 500).unwrap();
    let r = riemann_gap_check(&problem, &Mesh::equidistant(T, 128).unwrap(), 500).unwrap();
    assert!(r.ok, "{r:?}");
    let r = riemann_gap_check(&problem, &Mesh::equidistant(T, 4).unwrap(), 2).unwrap();
    assert!(r.ok, "{r:?}");
}

#[test]
fn decay_inverse_brute_force() {
    let profile = DecayProfile::power(0.4, 1.0).unwrap();
    for eps in [0.9, 0.5, 0.2, 0.1, 0.05] {
        let got = profile.inverse(eps).unwrap();
        let brute = (1..200_000u64)
            .filter(|&k| profile.delta(k) > eps)
            .max()
            .unwrap_or(0);
        assert_eq!(got, brute, "eps = {eps}");
    }
}
