use brwlab_core::kernels::{JumpKernel, TorusGrid};
use brwlab_core::moments::{solve_factorial_moments, Boundary, LatticeBox, MomentOptions};
use brwlab_core::sim::{
    estimate_moments, local_time_path, run_field, simulate, InitMode, SimConfig,
};
use brwlab_core::spectral::{PerturbationField, Source};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

fn srw(d: usize) -> JumpKernel {
    JumpKernel::named(&format!("srw-d{d}")).unwrap()
}

#[test]
fn jump_counts_are_poisson() {
    let t = 3.0;
    let field = PerturbationField::unperturbed(0.0).unwrap();
    let config = SimConfig::new(
        srw(2),
        field,
        InitMode::Single { site: vec![0, 0] },
        vec![t],
        20_000,
        5,
    );
    let stats = simulate(&config, false).unwrap();
    let n = stats.replicas.len() as f64;
    let bins = 9; // 0..=7 and 8+
    let mut observed = vec![0.0; bins];
    for r in &stats.replicas {
        assert_eq!(r.events.splits + r.events.deaths, 0);
        observed[(r.events.jumps as usize).min(bins - 1)] += 1.0;
    }
    let law = Poisson::new(t).unwrap();
    let mut expected: Vec<f64> = (0..bins - 1).map(|k| n * law.pmf(k as u64)).collect();
    expected.push(n - expected.iter().sum::<f64>());
    let chi2: f64 = observed
        .iter()
        .zip(&expected)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    let p = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(chi2);
    assert!(p > 0.01, "χ² = {chi2}, p = {p}");
}

#[test]
fn critical_mean_stays_at_one() {
    let field = PerturbationField::unperturbed(1.0).unwrap();
    let config = SimConfig::new(
        srw(1),
        field,
        InitMode::OnePerSite { half_width: 200 },
        vec![1.0, 4.0, 8.0],
        400,
        17,
    );
    let stats = simulate(&config, false).unwrap();
    for j in 0..3 {
        let s = stats.probe_summary(j, 0);
        assert!(
            (s.mean - 1.0).abs() <= 3.0 * s.std_err,
            "t={}: {} ± {}",
            s.t,
            s.mean,
            s.std_err
        );
    }
}

#[test]
fn monte_carlo_agrees_with_the_hierarchy() {
    let k = srw(3);
    let field = PerturbationField::single(3, 1.0, 0.3).unwrap();
    let times = [1.0, 2.0, 4.0];
    let config = SimConfig::new(
        k.clone(),
        field.clone(),
        InitMode::Single {
            site: vec![0, 0, 0],
        },
        times.to_vec(),
        4000,
        23,
    );
    let stats = simulate(&config, false).unwrap();
    let estimates = estimate_moments(&stats, 2).unwrap();

    let lattice = LatticeBox::new(3, 8, Boundary::Absorbing).unwrap();
    let h = lattice.generator(&k, &field).unwrap();
    let opts = MomentOptions {
        dt: 0.01,
        step_halving: false,
    };
    let table = solve_factorial_moments(&h, &lattice, &field, 2, &[0, 0, 0], &times, opts).unwrap();
    for e in &estimates {
        let j = times.iter().position(|&t| t == e.t).unwrap();
        let exact = table.get(e.order, j, &[0, 0, 0]).unwrap();
        assert!(
            (e.mean - exact).abs() <= 3.0 * e.std_err,
            "order {} t={}: {} ± {} vs {exact}",
            e.order,
            e.t,
            e.mean,
            e.std_err
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn replicas_are_deterministic(seed in any::<u64>(), replica in 0u64..1000) {
        let field = PerturbationField::single(2, 0.5, 0.3).unwrap();
        let config = SimConfig::new(srw(2), field, InitMode::OnePerSite { half_width: 4 }, vec![0.5, 1.5], 1, seed);
        let a = run_field(&config, replica, true).unwrap();
        let b = run_field(&config, replica, true).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn local_time_functional_is_monotone_and_at_least_one(seed in any::<u64>(), sigma in 0.01f64..2.0) {
        let sources = [Source { site: vec![0, 0, 0], sigma }];
        let times: Vec<f64> = (0..=20).map(|j| j as f64 * 2.5).collect();
        let path = local_time_path(&srw(3), &sources, &times, seed).unwrap();
        let weights: Vec<f64> = path.iter().map(|s| (sigma * s.local_times[0]).exp()).collect();
        prop_assert!(weights.iter().all(|&w| w >= 1.0));
        prop_assert!(weights.windows(2).all(|w| w[1] >= w[0]));
        for s in &path {
            prop_assert!(s.local_times[0] <= s.t);
        }
    }
}

#[test]
fn heat_kernel_of_the_walk_matches_quadrature() {
    use brwlab_core::kernels::transition_probability;
    let k = srw(2);
    let field = PerturbationField::unperturbed(0.0).unwrap();
    let config = SimConfig::new(
        k.clone(),
        field,
        InitMode::Single { site: vec![0, 0] },
        vec![2.0],
        40_000,
        3,
    );
    let stats = simulate(&config, true).unwrap();
    let grid = TorusGrid::new(2, 64).unwrap();
    for x in [[0i64, 0], [1, 0], [1, 1], [2, 0]] {
        let hits = stats
            .replicas
            .iter()
            .filter(|r| {
                r.snapshots[0]
                    .field
                    .as_ref()
                    .unwrap()
                    .iter()
                    .any(|(p, _)| p[..] == x[..])
            })
            .count() as f64;
        let n = stats.replicas.len() as f64;
        let p = transition_probability(&k, &grid, 2.0, &[0, 0], &x)
            .unwrap()
            .value;
        let se = (p * (1.0 - p) / n).sqrt();
        assert!(
            (hits / n - p).abs() <= 4.0 * se,
            "x={x:?}: {} vs {p}",
            hits / n
        );
    }
}
