use proptest::prelude::*;
use proptest::strategy::Strategy as _;

use regretlab_core::beta_compare::{
    prob_less, prob_less_finite_sum, prob_less_quadrature, BetaParams,
};
use regretlab_core::bounds::{min_observations, miss_probability_bound_raw, GapSpec};
use regretlab_core::probability::{compositions, observation_space_size};
use regretlab_core::sampling::stream_rng;
use regretlab_core::simulation::{run_trial, synthesize_dataset};
use regretlab_core::strategies::greedy_strategy;
use regretlab_core::{
    enumerate_observations, expected_regret, ModelDims, ObservationMatrix, State, Strategy,
    TsConfig,
};

fn column(n_r: usize) -> impl prop::strategy::Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n_r).prop_map(|w| {
        let total: f64 = w.iter().sum();
        if total <= 1e-9 {
            let mut unit = vec![0.0; w.len()];
            unit[0] = 1.0;
            unit
        } else {
            w.iter().map(|x| x / total).collect()
        }
    })
}

fn state(max_d: usize, max_r: usize) -> impl prop::strategy::Strategy<Value = State> {
    (1..=max_d, 2..=max_r).prop_flat_map(|(n_d, n_r)| {
        prop::collection::vec(column(n_r), n_d).prop_map(|cols| State::from_columns(cols).unwrap())
    })
}

fn counts(n_r: usize, m: u32) -> impl prop::strategy::Strategy<Value = Vec<u32>> {
    prop::collection::vec(0..n_r, m as usize).prop_map(move |draws| {
        let mut c = vec![0u32; n_r];
        for r in draws {
            c[r] += 1;
        }
        c
    })
}

fn observation(
    max_d: usize,
    max_r: usize,
    max_m: u32,
) -> impl prop::strategy::Strategy<Value = ObservationMatrix> {
    (1..=max_d, 2..=max_r, 1..=max_m).prop_flat_map(|(n_d, n_r, m)| {
        prop::collection::vec(counts(n_r, m), n_d)
            .prop_map(|cols| ObservationMatrix::from_columns(cols).unwrap())
    })
}

fn all_strategies() -> [Strategy; 4] {
    [
        Strategy::Uniform,
        Strategy::Greedy,
        Strategy::Ucb,
        Strategy::ThompsonSampling(TsConfig {
            mc_samples: 2000,
            ..TsConfig::default()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decisions_are_distributions(b in observation(4, 5, 8)) {
        for s in all_strategies() {
            let d = s.decide(&b).unwrap();
            prop_assert_eq!(d.n_products(), b.n_products());
            prop_assert!(d.weights().iter().all(|&w| (0.0..=1.0).contains(&w)));
            let total: f64 = d.weights().iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn greedy_supports_only_best_observed(b in observation(4, 5, 8)) {
        let d = greedy_strategy(&b).unwrap();
        let best = (0..b.n_products()).map(|i| b.value_numerator(i).unwrap()).max().unwrap();
        for i in 0..b.n_products() {
            let on_best = b.value_numerator(i).unwrap() == best;
            prop_assert_eq!(d.weight(i) > 0.0, on_best);
        }
    }

    #[test]
    fn greedy_is_permutation_equivariant(b in observation(4, 4, 6), seed in any::<u64>()) {
        let n = b.n_products();
        let mut perm: Vec<usize> = (0..n).collect();
        // Fisher–Yates with a seed-derived sequence
        let mut x = seed;
        for i in (1..n).rev() {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (x >> 33) as usize % (i + 1));
        }
        let permuted = ObservationMatrix::from_columns(perm.iter().map(|&p| b.columns()[p].clone()).collect()).unwrap();
        let d = greedy_strategy(&b).unwrap();
        let dp = greedy_strategy(&permuted).unwrap();
        for (i, &p) in perm.iter().enumerate() {
            prop_assert_eq!(dp.weight(i), d.weight(p));
            prop_assert_eq!(permuted.observed_value(i).unwrap(), b.observed_value(p).unwrap());
        }
    }

    #[test]
    fn likelihoods_sum_to_one(s in state(3, 3), m in 0u32..=5) {
        let space = enumerate_observations(ModelDims::new(s.n_products(), s.n_ratings(), m).unwrap()).unwrap();
        let total: f64 = space.likelihoods(&s).unwrap().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
        prop_assert_eq!(space.len() as u128, observation_space_size(&space.dims()).unwrap());
    }

    #[test]
    fn regret_is_bounded(s in state(3, 4), m in 1u32..=3) {
        let spread = (s.n_ratings() - 1) as f64;
        for strat in [Strategy::Uniform, Strategy::Greedy, Strategy::Ucb] {
            let r = expected_regret(&strat, &s, m).unwrap();
            prop_assert!(r.regret >= 0.0);
            prop_assert!(r.regret <= spread + 1e-12);
            prop_assert!((r.best_value - r.payoff - r.regret).abs() <= 1e-9);
        }
    }

    #[test]
    fn uniform_payoff_is_mean_value(s in state(3, 3), m in 0u32..=4) {
        let mean = s.values().iter().sum::<f64>() / s.n_products() as f64;
        let r = expected_regret(&Strategy::Uniform, &s, m).unwrap();
        prop_assert!((r.payoff - mean).abs() <= 1e-12);
    }

    #[test]
    fn state_json_round_trip(s in state(4, 5)) {
        let text = serde_json::to_string(&s).unwrap();
        let back: State = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn composition_count(m in 0u32..=8, parts in 1usize..=5) {
        let c = compositions(m, parts);
        let dims = ModelDims::new(1, parts.max(2), m).unwrap();
        if parts >= 2 {
            prop_assert_eq!(c.len() as u128, observation_space_size(&dims).unwrap());
        }
        prop_assert!(c.iter().all(|v| v.iter().sum::<u32>() == m && v.len() == parts));
        prop_assert!(c.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn min_observations_is_tight(nd in 1usize..20, nr in 2usize..8, gap_frac in 0.01f64..1.0, delta in 0.001f64..0.5) {
        let gap = gap_frac * (nr - 1) as f64;
        let spec = GapSpec::new(nd, nr, gap, delta).unwrap();
        let m = min_observations(&spec).finite().unwrap();
        prop_assert!(miss_probability_bound_raw(&spec, m) <= delta);
        if m > 0 {
            prop_assert!(miss_probability_bound_raw(&spec, m - 1) > delta);
        }
        prop_assert!(miss_probability_bound_raw(&spec, m + 1) <= miss_probability_bound_raw(&spec, m));
    }

    #[test]
    fn beta_comparison_is_complementary(a1 in 0.05f64..20.0, b1 in 0.05f64..20.0, a2 in 0.05f64..20.0, b2 in 0.05f64..20.0) {
        let x = BetaParams::new(a1, b1).unwrap();
        let y = BetaParams::new(a2, b2).unwrap();
        let p = prob_less(x, y).unwrap().prob;
        let q = prob_less(y, x).unwrap().prob;
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p + q - 1.0).abs() <= 1e-7);
    }

    #[test]
    fn finite_sum_matches_quadrature(a1 in 1u32..15, b1 in 0.05f64..15.0, a2 in 0.05f64..15.0, b2 in 0.05f64..15.0) {
        let x = BetaParams::new(f64::from(a1), b1).unwrap();
        let y = BetaParams::new(a2, b2).unwrap();
        let exact = prob_less_finite_sum(x, y).unwrap();
        let quad = prob_less_quadrature(x, y, 1e-10).unwrap().prob;
        prop_assert!((exact - quad).abs() <= 1e-7, "{exact} vs {quad}");
    }

    #[test]
    fn trial_regret_is_bounded(s in state(6, 5), n_d in 1usize..=6, m in 1usize..=5, seed in any::<u64>()) {
        let mut rng = stream_rng(&[seed]);
        let ds = synthesize_dataset(&s, 20, &mut rng).unwrap();
        let n_d = n_d.min(s.n_products());
        for strat in all_strategies() {
            let r = run_trial(&ds, n_d, m, &strat, &mut rng).unwrap();
            prop_assert!(r >= 0.0 && r <= (s.n_ratings() - 1) as f64);
            if n_d == 1 {
                prop_assert_eq!(r, 0.0);
            }
        }
    }
}
