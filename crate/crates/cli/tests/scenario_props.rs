use std::path::Path;

use brwlab::scenario::{
    parse_table, scenario_from_table, DomainKind, InitKind, KernelSpec, MomentsSection, SigmaRange,
    SimulateSection, SpectralSection, ToleranceProfile,
};
use brwlab::{Experiment, Scenario};
use proptest::prelude::*;

fn reload(s: &Scenario) -> Scenario {
    let text = s.to_toml().unwrap();
    scenario_from_table(parse_table(&text, Path::new("round.toml")).unwrap(), None).unwrap()
}

fn scenario_strategy() -> impl Strategy<Value = Scenario> {
    (
        prop::sample::select(vec!["srw-d1", "srw-d2", "srw-d3"]),
        0usize..3,
        prop::option::of(0.01f64..2.0),
        0.0f64..3.0,
        any::<u32>(),
        any::<bool>(),
        (1usize..6, 0.5f64..10.0, 1usize..8),
        (1usize..200, prop::collection::vec(0.1f64..50.0, 1..4)),
    )
        .prop_map(|(kernel, which, sigma, mu, seed, strict, moments, sim)| {
            let experiment = [
                Experiment::Spectral,
                Experiment::Moments,
                Experiment::Simulate,
            ][which];
            let mut s = Scenario::minimal(kernel, experiment);
            s.mu = mu;
            s.seed = seed as u64;
            s.tolerance_profile = if strict {
                ToleranceProfile::Strict
            } else {
                ToleranceProfile::Fast
            };
            s.sigma = sigma;
            match experiment {
                Experiment::Spectral => {
                    if s.sigma.is_none() {
                        s.sigma = Some(0.2);
                    }
                    s.spectral = Some(SpectralSection {
                        sigma_range: Some(SigmaRange {
                            min: 0.1,
                            max: 0.5,
                            step: 0.2,
                        }),
                        ..Default::default()
                    })
                }
                Experiment::Moments => {
                    let (order, t_end, half) = moments;
                    s.moments = Some(MomentsSection {
                        max_order: Some(order),
                        t_end: Some(t_end),
                        half_width: Some(half + 2),
                        ..Default::default()
                    })
                }
                _ => {
                    let (replicas, mut checkpoints) = sim;
                    checkpoints.sort_by(f64::total_cmp);
                    s.simulate = Some(SimulateSection {
                        replicas: Some(replicas),
                        checkpoints,
                        init: Some(InitKind::OnePerSite),
                        domain: Some(DomainKind::Periodic),
                        window: Some(5),
                        ..Default::default()
                    })
                }
            }
            s
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn load_of_write_is_identity(s in scenario_strategy()) {
        // the first load fills defaults; after that the file is a fixed point
        let loaded = reload(&s);
        prop_assert_eq!(reload(&loaded), loaded.clone());
        prop_assert_eq!(loaded.seed, s.seed);
        prop_assert_eq!(loaded.mu, s.mu);
        prop_assert_eq!(loaded.sigma, s.sigma);
        prop_assert!(matches!(loaded.kernel, KernelSpec::Name(_)));
    }
}
