//! Statistical and reproducibility checks of the Brownian increment source.
//! Statistical tolerances are three standard errors.

use sde_trunc::analysis::{monte_carlo_error, Method, MonteCarloConfig};
use sde_trunc::mesh::{EpsilonRule, Mesh};
use sde_trunc::model::benchmark_problem;
use sde_trunc::wiener::NoisePlan;

fn draws(seed: u64, trajectories: u64, coords: usize, intervals: u64) -> Vec<f64> {
    let mut out = Vec::new();
    for l in 0..trajectories {
        let plan = NoisePlan::new(seed, l, coords).unwrap();
        for k in 1..=coords {
            for j in 0..intervals {
                out.push(plan.standard_normal(k, j));
            }
        }
    }
    out
}

fn moment(xs: &[f64], r: i32) -> f64 {
    xs.iter().map(|x| x.powi(r)).sum::<f64>() / xs.len() as f64
}

#[test]
fn gaussian_moments() {
    let xs = draws(11, 20, 50, 400);
    let n = xs.len() as f64;
    assert!(moment(&xs, 1).abs() <= 3.0 / n.sqrt());
    assert!((moment(&xs, 2) - 1.0).abs() <= 3.0 * (2.0 / n).sqrt());
    assert!(moment(&xs, 3).abs() <= 3.0 * (15.0 / n).sqrt());
    assert!((moment(&xs, 4) - 3.0).abs() <= 3.0 * (96.0 / n).sqrt());
    // tail mass beyond 3: 2 (1 - Phi(3)) = 0.0026998
    let tail = xs.iter().filter(|x| x.abs() > 3.0).count() as f64 / n;
    let p = 0.002_699_796;
    assert!((tail - p).abs() <= 3.0 * (p * (1.0 - p) / n).sqrt());
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64
}

#[test]
fn coordinates_intervals_and_paths_are_uncorrelated() {
    let plan = NoisePlan::new(3, 0, 64).unwrap();
    let len = 4000u64;
    let series = |p: &NoisePlan, k: usize| {
        (0..len)
            .map(|j| p.standard_normal(k, j))
            .collect::<Vec<_>>()
    };
    let bound = 3.0 / (len as f64).sqrt();
    for k in [1, 2, 17, 63] {
        let a = series(&plan, k);
        let b = series(&plan, k + 1);
        assert!(
            correlation(&a, &b).abs() <= bound,
            "coordinates {k}, {}",
            k + 1
        );
        assert!(
            correlation(&a[1..], &a[..a.len() - 1]).abs() <= bound,
            "lag 1 of coordinate {k}"
        );
        let other = series(&plan.with_trajectory(1), k);
        assert!(
            correlation(&a, &other).abs() <= bound,
            "paths 0, 1 at coordinate {k}"
        );
    }
}

#[test]
fn increments_have_step_variance() {
    let mesh = Mesh::from_nodes(vec![0.0, 0.01, 0.5, 2.0]).unwrap();
    let steps: Vec<f64> = mesh.steps().collect();
    let paths = 4000;
    let mut sq = [0.0; 3];
    for l in 0..paths {
        let table = NoisePlan::new(5, l, 4).unwrap().sample(&mesh);
        for (j, s) in sq.iter_mut().enumerate() {
            *s += table.block(j).iter().map(|d| d * d).sum::<f64>();
        }
    }
    let n = (paths * 4) as f64;
    for (s, dt) in sq.iter().zip(&steps) {
        let var = s / n;
        assert!((var / dt - 1.0).abs() <= 3.0 * (2.0 / n).sqrt());
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let cfg = MonteCarloConfig {
        problem: benchmark_problem(0.9, 40).unwrap(),
        method: Method::Adaptive,
        n: 16,
        coords: 20,
        trajectories: 24,
        ref_n: 256,
        w_ratio: 2.0,
        master_seed: 99,
        epsilon: EpsilonRule::default(),
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| monte_carlo_error(&cfg).unwrap())
    };
    let one = run(1);
    let many = run(7);
    assert_eq!(one, many);
    assert_eq!(one.err_hat.to_bits(), many.err_hat.to_bits());
}
