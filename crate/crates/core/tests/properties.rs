use cdst_core::analysis::{approx_factor, best_b};
use cdst_core::generators::{gen_random, gen_random_arborescence, Backend, WeightDist};
use cdst_core::oracle::{
    brute_force_balance, brute_force_port, exact_cost_distance, exact_cost_distance_by_size, exact_steiner_length,
};
use cdst_core::pipeline::{solve, verify_certificate, BaseMethod, Reconnect, RootMode, StrategyConfig};
use cdst_core::reconnect::best_port;
use cdst_core::{exact_base, mst_base};
use proptest::prelude::*;

fn backend() -> impl Strategy<Value = Backend> {
    prop_oneof![
        (0usize..4, 0usize..8).prop_map(|(steiner, extra_edges)| Backend::Graph { steiner, extra_edges }),
        Just(Backend::L1),
        Just(Backend::L2),
        Just(Backend::Matrix),
    ]
}

fn weights() -> impl Strategy<Value = WeightDist> {
    prop_oneof![
        (0.0f64..5.0).prop_map(|max| WeightDist::Uniform { max }),
        (0.0f64..5.0, 0.0f64..1.0).prop_map(|(max, zero_prob)| WeightDist::ZeroInflated { max, zero_prob }),
        Just(WeightDist::Zero),
    ]
}

fn configs() -> Vec<StrategyConfig> {
    let mut out = Vec::new();
    for reconnect in [Reconnect::Lemma1, Reconnect::Split2, Reconnect::Split3] {
        for root_mode in [RootMode::Keep, RootMode::Improve] {
            out.push(StrategyConfig::new(BaseMethod::Mst2, reconnect, root_mode));
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn certificates_hold(seed in any::<u64>(), n in 1usize..40, backend in backend(), w in weights()) {
        let inst = gen_random(seed, n, backend, w, 10.0).unwrap();
        for cfg in configs() {
            let sol = solve(&inst, &cfg).unwrap();
            let report = verify_certificate(&sol, &inst);
            prop_assert!(report.passed, "{}: {:?}", cfg.label(), report.failures);
            prop_assert!(sol.certificate.actual_cost >= sol.certificate.lower_bound * (1.0 - 1e-9) - 1e-9);
        }
    }

    #[test]
    fn port_matches_brute_force(seed in any::<u64>(), n in 1usize..30, w in weights()) {
        let (_, a) = gen_random_arborescence(seed, n, w).unwrap();
        let fast = best_port(&a).unwrap();
        let slow = brute_force_port(&a).unwrap();
        prop_assert_eq!(fast.port, slow.port);
        prop_assert!((fast.cost - slow.cost).abs() <= 1e-9 * slow.cost.abs().max(1.0));
    }

    #[test]
    fn balance_matches_brute_force(seed in any::<u64>(), n in 2usize..30, w in weights()) {
        let (_, a) = gen_random_arborescence(seed, n, w).unwrap();
        let fast = a.balance_edge().unwrap();
        let slow = brute_force_balance(&a).unwrap();
        prop_assert!((fast.omega - slow.omega).abs() <= 1e-9 * slow.omega.max(1.0));
    }

    #[test]
    fn exact_base_is_shortest(seed in any::<u64>(), n in 1usize..6, steiner in 0usize..4, extra in 0usize..6) {
        let inst = gen_random(seed, n, Backend::Graph { steiner, extra_edges: extra }, WeightDist::Zero, 10.0).unwrap();
        let exact = exact_base(&inst).unwrap();
        let c_smt = exact_steiner_length(&inst).unwrap();
        prop_assert!((exact.length - c_smt).abs() <= 1e-9 * c_smt.max(1.0));
        prop_assert!(mst_base(&inst).length <= 2.0 * c_smt + 1e-9);
    }
}

#[test]
fn oracle_orders_agree_and_bound_the_ratio() {
    let limit = approx_factor(1.0, best_b()).unwrap();
    let cfg = StrategyConfig::new(BaseMethod::Exact, Reconnect::Split3, RootMode::Improve);
    let mut checked = 0;
    for seed in 0..40u64 {
        let n = 1 + (seed as usize % 5);
        let backend = Backend::Graph { steiner: seed as usize % 3, extra_edges: seed as usize % 6 };
        let inst = gen_random(seed, n, backend, WeightDist::Uniform { max: 3.0 }, 10.0).unwrap();
        let Ok(opt) = exact_cost_distance(&inst) else { continue };
        assert!((exact_cost_distance_by_size(&inst).unwrap() - opt.optimum).abs() <= 1e-9 * opt.optimum.max(1.0));
        assert!(opt.optimum >= opt.steiner_length + inst.total_min_delay_cost() - 1e-9);
        let sol = solve(&inst, &cfg).unwrap();
        assert!(sol.objective.total <= limit * opt.optimum + 1e-9, "seed {seed}");
        checked += 1;
    }
    assert!(checked >= 30);
}
