use proptest::prelude::*;

use sde_trunc::analysis::{
    conditional_error_predictor, convergence_study, simpson_l2_error, Method, MonteCarloConfig,
};
use sde_trunc::mesh::{step_count_bracket, EpsilonRule, Mesh};
use sde_trunc::model::{
    benchmark_problem, check_admissible, DecayProfile, Diffusion, SdeProblem, TruncationRule,
};
use sde_trunc::solver::{coupled_solve, euler_truncated, Trajectory};
use sde_trunc::wiener::NoisePlan;

fn scaled_problem(c: f64, horizon: f64) -> SdeProblem {
    let weights: Vec<f64> = (1..=8).map(|k| c / (k as f64 + 1.0)).collect();
    SdeProblem::new(
        horizon,
        0.0,
        |_, x| -x,
        Diffusion::separable(|t: f64| 1.0 + t.sin().abs(), weights),
        DecayProfile::power(0.5, 1.0).unwrap(),
    )
    .unwrap()
}

fn nested_pair() -> impl Strategy<Value = (Mesh, Mesh)> {
    (
        prop::collection::vec(0.01f64..0.99, 0..6),
        prop::collection::vec(0.01f64..0.99, 0..10),
    )
        .prop_map(|(c, extra)| {
            let coarse = Mesh::from_nodes(sorted_with_ends(c)).unwrap();
            let fine = coarse.with_times(&extra).unwrap();
            (coarse, fine)
        })
}

fn sorted_with_ends(mut v: Vec<f64>) -> Vec<f64> {
    v.push(0.0);
    v.push(1.0);
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn adaptive_mesh_bounds(n in 1usize..3000, m in 1usize..2000) {
        let problem = benchmark_problem(0.9, 2000).unwrap();
        let eps = EpsilonRule::default();
        let mesh = Mesh::adaptive(&problem, n, m, eps).unwrap();
        let k = mesh.intervals();
        let (lower, upper) = step_count_bracket(&problem, n, eps);
        prop_assert!(k as f64 >= lower && k as u64 <= upper);
        prop_assert!(mesh.stats().max_step <= 1.5 / (n as f64 * eps.value(n)));
        prop_assert_eq!(mesh.horizon(), 1.5);
        prop_assert_eq!(&mesh, &Mesh::adaptive(&problem, n, m, eps).unwrap());
    }

    #[test]
    fn predictor_scales_with_sigma(c in 0.0f64..20.0, n in 1usize..50) {
        let mesh = Mesh::equidistant(2.0, n).unwrap();
        let base = conditional_error_predictor(&scaled_problem(1.0, 2.0), &mesh, 8).unwrap();
        let scaled = conditional_error_predictor(&scaled_problem(c, 2.0), &mesh, 8).unwrap();
        prop_assert!((scaled - c * base).abs() <= 1e-12 * (c * base).max(1e-300));
    }

    #[test]
    fn predictor_scales_with_step(c in 0.01f64..50.0) {
        let one = conditional_error_predictor(&scaled_problem(1.0, 1.0), &Mesh::equidistant(1.0, 1).unwrap(), 8).unwrap();
        let p = scaled_problem(1.0, c);
        let stretched = conditional_error_predictor(&p, &Mesh::equidistant(c, 1).unwrap(), 8).unwrap();
        prop_assert!((stretched - c * one).abs() <= 1e-12 * c * one);
    }

    #[test]
    fn simpson_exact_on_cubics(
        inner in prop::collection::vec(0.01f64..0.99, 0..12),
        a in 0.0f64..2.0, b in -1.0f64..1.0, c in -1.0f64..1.0, d in 0.0f64..1.0,
    ) {
        // g(t) = a + b t + c t^2 + d t^3 shifted to stay non-negative on [0, 1]
        let g = |t: f64| a + b * t + c * t * t + d * t * t * t + 3.0;
        let mesh = Mesh::from_nodes(sorted_with_ends(inner)).unwrap();
        let zero = Trajectory::new(mesh.clone(), vec![0.0; mesh.nodes().len()]).unwrap();
        let reference: Vec<f64> = mesh.with_midpoints().iter().map(|&t| g(t).sqrt()).collect();
        let exact = a + b / 2.0 + c / 3.0 + d / 4.0 + 3.0;
        let q = simpson_l2_error(&zero, &reference).unwrap().powi(2);
        prop_assert!((q - exact).abs() <= 1e-12 * exact);
    }

    #[test]
    fn aggregation_is_exact((coarse, fine) in nested_pair(), seed in any::<u64>()) {
        let table = NoisePlan::new(seed, 0, 3).unwrap().sample(&fine);
        let agg = table.aggregate_to(&coarse).unwrap();
        let mut j = 0;
        for (c, w) in coarse.nodes().windows(2).enumerate() {
            let mut sums = [0.0; 3];
            while j < fine.intervals() && fine.nodes()[j] < w[1] {
                for (s, d) in sums.iter_mut().zip(table.block(j)) {
                    *s += d;
                }
                j += 1;
            }
            prop_assert_eq!(agg.block(c), &sums[..]);
        }
    }

    #[test]
    fn coupled_coarse_matches_direct_solve((coarse, _) in nested_pair(), seed in any::<u64>()) {
        let problem = scaled_problem(1.0, 1.0);
        let plan = NoisePlan::new(seed, 7, 6).unwrap();
        let out = coupled_solve(&problem, &coarse, 4, 64, 6, &plan, &coarse.with_midpoints()).unwrap();
        let fine = out.coarse.mesh().clone();
        prop_assert_eq!(&fine, &coarse);
        // rebuild the same fine mesh and aggregate by hand
        let union = Mesh::equidistant(1.0, 64).unwrap().union(&coarse).unwrap().with_times(&coarse.with_midpoints()).unwrap();
        let agg = plan.project(4).unwrap().sample(&union).aggregate_to(&coarse).unwrap();
        let direct = euler_truncated(&problem, &coarse, 4, &agg).unwrap();
        prop_assert_eq!(out.coarse.values(), direct.values());
    }

    #[test]
    fn interpolation_is_linear(values in prop::collection::vec(-5.0f64..5.0, 4), s in 0.0f64..1.0) {
        let mesh = Mesh::from_nodes(vec![0.0, 0.2, 0.7, 1.0]).unwrap();
        let traj = Trajectory::new(mesh.clone(), values.clone()).unwrap();
        for (t, v) in mesh.nodes().iter().zip(&values) {
            prop_assert_eq!(traj.interpolate(*t).unwrap(), *v);
        }
        let t = 0.2 + 0.5 * s;
        let expected = values[1] + (values[2] - values[1]) * s;
        prop_assert!((traj.interpolate(t).unwrap() - expected).abs() <= 1e-12);
    }

    #[test]
    fn truncation_levels_nondecreasing(n in 1u64..100_000, scale in 0.01f64..2.0, margin in 0.001f64..0.5) {
        let rule = TruncationRule::new(margin, scale).unwrap();
        for profile in [
            DecayProfile::power(0.4, 1.0).unwrap(),
            DecayProfile::custom(1.0, |k| 1.0 / (k as f64).ln_1p()).unwrap(),
        ] {
            prop_assert!(rule.level(&profile, n).unwrap() <= rule.level(&profile, n + 1).unwrap());
        }
    }
}

#[test]
fn benchmark_levels_are_admissible() {
    let problem = benchmark_problem(0.9, 1).unwrap();
    let rule = TruncationRule::default();
    let samples: Vec<(u64, u64)> = [100, 1000, 10_000, 100_000, 1_000_000]
        .iter()
        .map(|&n| (n, rule.level(problem.decay(), n).unwrap()))
        .collect();
    let report = check_admissible(problem.decay(), &samples).unwrap();
    assert!(report.monotone && report.admissible, "{report:?}");
}

#[test]
fn deterministic_problem_study_is_exact() {
    let problem = SdeProblem::new(
        1.0,
        1.0,
        |_, x| 0.5 * x,
        Diffusion::zero(),
        DecayProfile::power(1.0, 1.0).unwrap(),
    )
    .unwrap();
    let cfg = MonteCarloConfig {
        problem,
        method: Method::Equidistant,
        n: 4,
        coords: 1,
        trajectories: 2,
        ref_n: 64,
        w_ratio: 1.0,
        master_seed: 0,
        epsilon: EpsilonRule::default(),
    };
    // coarse and reference Euler differ on a deterministic ODE, but both are
    // path independent, so the estimated standard error vanishes
    let reports = convergence_study(&[2, 4, 8], &cfg).unwrap();
    for r in &reports {
        assert_eq!(r.cost, 0);
        assert_eq!(r.err_std, 0.0);
        assert_eq!(r.predictor, 0.0);
    }
}
