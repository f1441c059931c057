use brwlab_core::kernels::{JumpKernel, TorusGrid};
use brwlab_core::spectral::{
    box_principal_eigenvalue, critical_threshold, growth_eigenvalue, spectral_report,
    steady_mean_constant, PerturbationField, Regime, Source,
};
use brwlab_core::Error;
use proptest::prelude::*;

fn setup() -> (JumpKernel, TorusGrid, f64) {
    let k = JumpKernel::named("srw-d3").unwrap();
    let g = TorusGrid::default_for(3);
    let star = critical_threshold(&k, &g).unwrap().value;
    (k, g, star)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn threshold_consistency(sigma in 0.05f64..1.5) {
        let (k, g, star) = setup();
        prop_assume!((sigma - star).abs() > 1e-6);
        let field = PerturbationField::single(3, 1.0, sigma).unwrap();
        let steady = steady_mean_constant(&k, &g, &field);
        let growth = growth_eigenvalue(&k, &g, sigma);
        prop_assert_eq!(steady.is_ok(), sigma < star);
        prop_assert_eq!(growth.is_ok(), sigma > star);
        if sigma < star {
            let no_root = matches!(growth, Err(Error::NoRoot { .. }));
            prop_assert!(no_root);
            prop_assert!(steady.unwrap() > 1.0);
        } else {
            let rejected = matches!(steady, Err(Error::SupercriticalInput { .. }));
            prop_assert!(rejected);
            prop_assert!(growth.unwrap().lambda > 0.0);
        }
    }

    #[test]
    fn growth_rate_increases_with_sigma(a in 0.68f64..2.0, b in 0.68f64..2.0) {
        prop_assume!((a - b).abs() > 1e-3);
        let (k, g, _) = setup();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let l_lo = growth_eigenvalue(&k, &g, lo).unwrap().lambda;
        let l_hi = growth_eigenvalue(&k, &g, hi).unwrap().lambda;
        prop_assert!(l_lo < l_hi, "λ({lo}) = {l_lo}, λ({hi}) = {l_hi}");
    }

    #[test]
    fn box_eigenvector_is_positive(half_width in 2usize..7, delta in 0.05f64..3.0) {
        let k = JumpKernel::named("srw-d2").unwrap();
        let e = box_principal_eigenvalue(&k, half_width, delta, &[0, 0]).unwrap();
        prop_assert!(e.eigenvector.iter().all(|&v| v > 0.0));
        // the eigenvalue dominates the trial Rayleigh quotient
        prop_assert!(e.eigenvalue >= e.trial_rayleigh - 1e-10);
    }
}

#[test]
fn steady_constant_blows_up_at_the_threshold() {
    let (k, g, star) = setup();
    for eps in [0.1, 0.01] {
        let field = PerturbationField::single(3, 1.0, star * (1.0 - eps)).unwrap();
        let a = steady_mean_constant(&k, &g, &field).unwrap();
        // A = 1/(1 − σG₀) = 1/ε exactly at σ = σ*(1 − ε)
        assert!((a * eps - 1.0).abs() < 1e-9, "ε={eps}: A={a}");
    }
}

#[test]
fn one_source_through_the_multi_source_path() {
    let (k, g, _) = setup();
    let single = PerturbationField::single(3, 0.7, 0.4).unwrap();
    let multi = PerturbationField::new(
        0.7,
        vec![Source {
            site: vec![0, 0, 0],
            sigma: 0.4,
        }],
    )
    .unwrap();
    assert_eq!(
        steady_mean_constant(&k, &g, &single).unwrap(),
        steady_mean_constant(&k, &g, &multi).unwrap()
    );
    let r = spectral_report(&k, &g, &multi).unwrap();
    assert_eq!(r.regime, Regime::Subcritical);
}

#[test]
fn recurrent_walks_are_supercritical_for_any_source() {
    let k = JumpKernel::named("srw-d1").unwrap();
    let g = TorusGrid::default_for(1);
    let field = PerturbationField::single(1, 1.0, 0.05).unwrap();
    let r = spectral_report(&k, &g, &field).unwrap();
    assert!(r.recurrent);
    assert_eq!(r.regime, Regime::Supercritical);
    // for the 1D walk σ I(λ) = 1 gives λ = −1 + sqrt(1 + σ²)
    let lambda = r.growth_eigenvalue.unwrap().lambda;
    let exact = -1.0 + (1.0f64 + 0.05 * 0.05).sqrt();
    assert!(
        (lambda - exact).abs() < 1e-9 * exact.max(1e-3),
        "{lambda} vs {exact}"
    );
}
