//! Randomised structural invariants across modules.

use proptest::prelude::*;

use sinr_moments::coverage::{k_coverage, Fading, NetworkScenario, TierSpec};
use sinr_moments::icsc::{IcCondition, IcscQuery};
use sinr_moments::kernels::PathLossParams;
use sinr_moments::moments::{factorial_moment_stinr, ChannelParams, MomentQuery};
use sinr_moments::netsim::{simulate, SimConfig};
use sinr_moments::qmc::QmcConfig;
use sinr_moments::scenario::ScenarioFile;

fn channel(beta: f64, noise: f64, gamma: f64) -> ChannelParams {
    NetworkScenario::new(
        PathLossParams::new(beta, 1.0).unwrap(),
        noise,
        gamma,
        vec![TierSpec::new(1.0, 1.0, Fading::Constant, 1.0).unwrap()],
    )
    .unwrap()
    .channel()
    .unwrap()
}

fn qmc() -> QmcConfig {
    QmcConfig::default().with_points(1 << 12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn moment_vanishes_off_the_simplex(
        beta in 2.5f64..6.0,
        gamma in 0.1f64..=1.0,
        w in proptest::collection::vec(0.05f64..1.0, 2..5),
        excess in 1.0f64..1.5,
    ) {
        let sum: f64 = w.iter().sum();
        let t: Vec<f64> = w.iter().map(|x| x * excess / (gamma * sum)).collect();
        let m = factorial_moment_stinr(&MomentQuery::new(t).unwrap(), &channel(beta, 0.0, gamma), &qmc()).unwrap();
        prop_assert_eq!(m.value, 0.0);
        prop_assert_eq!(m.std_error, 0.0);
    }

    #[test]
    fn moment_is_symmetric_in_its_thresholds(
        beta in 2.5f64..6.0,
        noise in 0.0f64..0.5,
        t in proptest::collection::vec(0.02f64..0.3, 3),
        rot in 1usize..3,
    ) {
        let p = channel(beta, noise, 1.0);
        let mut u = t.clone();
        u.rotate_left(rot);
        let a = factorial_moment_stinr(&MomentQuery::new(t).unwrap(), &p, &qmc()).unwrap();
        let b = factorial_moment_stinr(&MomentQuery::new(u).unwrap(), &p, &qmc()).unwrap();
        let tol = 4.0 * (a.std_error.powi(2) + b.std_error.powi(2)).sqrt() + 1e-12 * a.value.abs();
        prop_assert!((a.value - b.value).abs() <= tol, "{:?} vs {:?}", a, b);
    }

    #[test]
    fn k_coverage_is_nested(beta in 2.5f64..6.0, tau in 0.1f64..3.0) {
        let s = NetworkScenario::single_tier(beta, tau).unwrap();
        let mut prev = k_coverage(1, &s, &qmc()).unwrap();
        prop_assert!((0.0..=1.0).contains(&prev.value));
        for k in 2..=4 {
            let next = k_coverage(k, &s, &qmc()).unwrap();
            let tol = 3.0 * (prev.std_error.powi(2) + next.std_error.powi(2)).sqrt() + 1e-12;
            prop_assert!(next.value <= prev.value + tol, "k={}: {:?} > {:?}", k, next, prev);
            prev = next;
        }
    }

    #[test]
    fn independent_cancellation_implies_successive(
        gamma in 0.2f64..=1.0,
        raw in proptest::collection::vec(0.0f64..1.0, 4),
        k in 2usize..=4,
        tau in 0.3f64..3.0,
        eps_frac in 0.05f64..=1.0,
        combine_all in any::<bool>(),
    ) {
        let total: f64 = raw.iter().sum::<f64>() + 1e-9;
        let mut z: Vec<f64> = raw.iter().map(|x| x / (gamma * total) * 0.999).collect();
        z.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let combine = if combine_all { (1..=k).collect() } else { vec![1] };
        let eps = tau * eps_frac;
        let iic = IcscQuery::new(k, combine.clone(), tau, eps, IcCondition::Iic).unwrap();
        let sic = IcscQuery::new(k, combine, tau, eps, IcCondition::Sic).unwrap();
        prop_assert!(!iic.event(&z, gamma) || sic.event(&z, gamma), "z={:?}", z);
    }

    #[test]
    fn scenario_file_round_trips(
        beta in 2.1f64..8.0,
        k in 0.5f64..4.0,
        noise in 0.0f64..2.0,
        gamma in 0.05f64..=1.0,
        tau in 0.05f64..10.0,
    ) {
        let s = NetworkScenario::new(
            PathLossParams::new(beta, k).unwrap(),
            noise,
            gamma,
            vec![TierSpec::new(2.0, 3.0, Fading::Exponential { mean: 1.0 }, tau).unwrap()],
        )
        .unwrap();
        let f = ScenarioFile::from_scenario(&s);
        let back = ScenarioFile::parse(&f.to_json()).unwrap();
        prop_assert_eq!(&back, &f);
        // Thresholds are stored in dB, so τ survives only to rounding.
        let mut r = back.scenario().unwrap();
        prop_assert!((r.tiers[0].tau / s.tiers[0].tau - 1.0).abs() < 1e-12);
        r.tiers[0].tau = s.tiers[0].tau;
        prop_assert_eq!(r, s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn simulated_rows_are_sorted_and_bounded(
        beta in 2.5f64..5.0,
        gamma in 0.2f64..=1.0,
        seed in any::<u64>(),
    ) {
        let s = NetworkScenario::new(
            PathLossParams::new(beta, 1.0).unwrap(),
            0.0,
            gamma,
            vec![TierSpec::new(1.0, 1.0, Fading::Exponential { mean: 1.0 }, 1.0).unwrap()],
        )
        .unwrap();
        let cfg = SimConfig { region_radius: 5.0, trials: 200, seed, top_k: 4, ..SimConfig::default() };
        let b = simulate(&s, &cfg).unwrap();
        for t in 0..b.trials() {
            let z = b.values(t);
            prop_assert!(z.windows(2).all(|w| w[0] >= w[1]), "{:?}", z);
            prop_assert!(z.iter().sum::<f64>() <= b.stinr_sum[t] * (1.0 + 1e-12));
            prop_assert!(gamma * b.stinr_sum[t] <= 1.0 + 1e-12);
        }
    }
}
