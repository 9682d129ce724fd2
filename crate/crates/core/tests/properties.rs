use flowmarket::agents::{random_agents, AgentProfile, AgentRanges, MarketInstance};
use flowmarket::equilibria::{
    equal_price_check, interior_check, solve_standard_swe, solve_swe, star_flow_construct,
    verify_ce,
};
use flowmarket::flownet::{generate_er, star_graph};
use flowmarket::qpcore::max_slack_lp;
use flowmarket::shaping::{algorithm1_enumerate, sstar_membership, validate_equal_prices};
use flowmarket::{ParamBox, SolveOptions};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn opts() -> SolveOptions {
    SolveOptions::with_tol(1e-9)
}

fn random_market(
    n: usize,
    extra_edges: usize,
    caps: [f64; 2],
    ranges: &AgentRanges,
    seed: u64,
) -> MarketInstance {
    let edges = (n - 1 + extra_edges).min(n * (n - 1) / 2);
    let net = generate_er(n, edges, caps[0], caps[1], seed).unwrap();
    MarketInstance::new(net, random_agents(n, ranges, seed).unwrap()).unwrap()
}

fn wide_ranges() -> AgentRanges {
    AgentRanges {
        a: [0.0, 5.0],
        theta1: [0.2, 2.0],
        theta2: [0.0, 10.0],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn welfare_solutions_are_competitive(n in 2usize..9, extra in 0usize..6, cap_hi in 0.1f64..4.0, seed in any::<u64>()) {
        let inst = random_market(n, extra, [0.0, cap_hi], &wide_ranges(), seed);
        let sol = solve_swe(&inst, &opts()).unwrap();
        let report = verify_ce(&inst, &sol, 1e-6).unwrap();
        prop_assert!(report.passed, "{:?}", report);
        prop_assert!(sol.lambda.iter().all(|&l| l >= -1e-8));
        prop_assert!(sol.price_identity_residual() <= 1e-8);
    }

    #[test]
    fn unlimited_capacity_trades_are_unique(n in 2usize..8, extra in 0usize..5, seed in any::<u64>()) {
        let ranges = AgentRanges { a: [0.0, 5.0], theta1: [0.5, 0.6], theta2: [18.0, 20.0] };
        let inst = random_market(n, extra, [1e6, 1e6 + 1.0], &ranges, seed);
        let nv = 2 * n + inst.network().arc_count();
        let base = solve_swe(&inst, &opts()).unwrap();
        prop_assert!(base.lambda.iter().all(|&l| l > 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..4 {
            let mut o = opts();
            o.start = Some((0..nv).map(|_| rng.gen_range(0.0..5.0)).collect());
            let other = solve_swe(&inst, &o).unwrap();
            for (a, b) in base.e.iter().zip(&other.e) {
                prop_assert!((a - b).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn interior_standard_trades_give_equal_prices(n in 2usize..8, extra in 0usize..6, cap_lo in 0.5f64..3.0, seed in any::<u64>()) {
        let inst = random_market(n, extra, [cap_lo, cap_lo + 2.0], &wide_ranges(), seed);
        let std = solve_standard_swe(&inst, &opts()).unwrap();
        let check = interior_check(inst.network(), &std.e, 1e-7, &opts()).unwrap();
        if check.is_interior {
            let sol = solve_swe(&inst, &opts()).unwrap();
            prop_assert!(equal_price_check(&sol, 1e-6).all_equal);
        }
    }

    #[test]
    fn star_construction_is_strictly_interior(n in 2usize..7, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let caps: Vec<f64> = (0..2 * (n - 1)).map(|_| rng.gen_range(0.1..5.0)).collect();
        let net = star_graph(n, caps).unwrap();
        let mut e = vec![0.0; n];
        for (i, v) in e.iter_mut().enumerate().skip(1) {
            let (lo, hi) = net.capacity_bounds(i).unwrap();
            *v = rng.gen_range(0.99 * lo..0.99 * hi);
        }
        e[0] = -e[1..].iter().sum::<f64>();
        let y = star_flow_construct(&net, &e).unwrap();
        for (f, t) in net.net_flow(&y).unwrap().iter().zip(&e) {
            prop_assert!((f - t).abs() <= 1e-10);
        }
        for (v, u) in y.iter().zip(net.capacities()) {
            prop_assert!(*v > 0.0 && v < u);
        }
    }

    #[test]
    fn star_realizability_matches_leaf_intervals(n in 2usize..7, push in 0.5f64..1.5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let caps: Vec<f64> = (0..2 * (n - 1)).map(|_| rng.gen_range(0.1..5.0)).collect();
        let net = star_graph(n, caps).unwrap();
        let mut e = vec![0.0; n];
        let mut inside = true;
        for (i, v) in e.iter_mut().enumerate().skip(1) {
            let (lo, hi) = net.capacity_bounds(i).unwrap();
            *v = push * if rng.gen_bool(0.5) { lo } else { hi };
            inside &= lo <= *v && *v <= hi;
        }
        e[0] = -e[1..].iter().sum::<f64>();
        prop_assume!((push - 1.0).abs() > 1e-3);
        let lp = max_slack_lp(&net.incidence().a, &e, net.capacities(), &opts()).unwrap();
        prop_assert_eq!(lp.realizable(1e-7), inside);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Boxes that pass both the sampled approval and the exact membership
    /// test yield equal prices in every trial.
    #[test]
    fn approved_member_boxes_price_equally(
        t1 in 0.3f64..1.0, dt1 in 0.0f64..0.3,
        t2 in 10.0f64..30.0, dt2 in 0.0f64..5.0,
        u in 5.0f64..30.0, seed in any::<u64>(),
    ) {
        let pbox = ParamBox::new(t1, t1 + dt1, t2, t2 + dt2).unwrap();
        let template = MarketInstance::new(
            star_graph(5, vec![u; 8]).unwrap(),
            vec![AgentProfile::new(25.0, t1, t2).unwrap(); 5],
        ).unwrap();
        let approved = !algorithm1_enumerate(&template, &[pbox], 8, seed, &opts()).unwrap().approved.is_empty();
        let member = sstar_membership(&pbox, &template).unwrap().in_sstar;
        if approved && member {
            let r = validate_equal_prices(&pbox, &template, 8, seed, 1e-6, &opts());
            prop_assert_eq!(r.passed, 8);
        }
    }
}
