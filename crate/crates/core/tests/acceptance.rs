//! Acceptance criteria, one line each. Runs as a plain binary so that every
//! criterion reports even when an earlier one fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use flowmarket::agents::{random_agents, AgentProfile, AgentRanges, MarketInstance};
use flowmarket::equilibria::assemble_swe;
use flowmarket::equilibria::{
    equal_price_check, interior_check, solve_standard_swe, solve_swe, standard_ce_closed_form,
    star_flow_construct, verify_ce, EquilibriumSolution,
};
use flowmarket::experiments::{
    base_instance, run_experiment2, run_experiment3, run_experiment4, ExperimentConfig,
};
use flowmarket::flownet::{generate_er, star_graph, FlowNetwork};
use flowmarket::qpcore::{brute_force_qp, ConvexProgram, SolveOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn opts() -> SolveOptions {
    SolveOptions::with_tol(1e-9)
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Exp1Batch {
    solutions: Vec<(MarketInstance, EquilibriumSolution)>,
}

fn exp1_batch() -> Exp1Batch {
    let solutions = (1..=50)
        .map(|seed| {
            let mut cfg = ExperimentConfig::defaults(1).unwrap();
            cfg.seed = seed;
            let inst = base_instance(&cfg).unwrap();
            let sol = solve_swe(&inst, &opts()).unwrap();
            (inst, sol)
        })
        .collect();
    Exp1Batch { solutions }
}

fn equivalence(batch: &Exp1Batch) -> Outcome {
    let mut passed = 0;
    let mut worst: f64 = 0.0;
    for (inst, sol) in &batch.solutions {
        let r = verify_ce(inst, sol, 1e-6).unwrap();
        worst = worst.max(r.worst_residual());
        passed += r.passed as usize;
    }
    outcome(
        passed == 50,
        format!("{passed}/50 verified, worst residual {worst:.2e}"),
    )
}

fn nonnegative_prices(batch: &Exp1Batch) -> Outcome {
    let min = batch
        .solutions
        .iter()
        .flat_map(|(_, s)| s.lambda.iter().copied())
        .fold(f64::INFINITY, f64::min);
    outcome(min >= -1e-8, format!("min lambda {min:.3e}"))
}

fn price_identity(batch: &Exp1Batch) -> Outcome {
    let mut identity: f64 = 0.0;
    let mut literal: f64 = 0.0;
    for (inst, sol) in &batch.solutions {
        identity = identity.max(sol.price_identity_residual());
        let aq = inst.network().transpose_apply(&sol.q);
        literal = literal.max(max_abs(sol.xi.iter().zip(&aq).map(|(x, a)| x - a)));
    }
    outcome(
        identity <= 1e-8 && literal <= 1e-6,
        format!("max |lambda+beta+q| {identity:.2e} (<= 1e-8), max |xi - A^T q| {literal:.2e} (<= 1e-6)"),
    )
}

fn infinite_capacity() -> Outcome {
    let mut worst = [0.0f64; 4];
    let mut passed = 0;
    for seed in 1..=10 {
        let mut cfg = ExperimentConfig::defaults(2).unwrap();
        cfg.seed = seed;
        let report = run_experiment2(&cfg).unwrap();
        let c = report.collapse.as_ref().unwrap();
        let m = &report.records[0].metrics;
        let vals = [c.e_gap, m.price_spread, m.q_inf_norm, c.restart_deviation];
        let limits = [1e-5, 1e-6, 1e-6, 1e-6];
        passed += vals.iter().zip(&limits).all(|(v, l)| v <= l) as usize;
        for (w, v) in worst.iter_mut().zip(vals) {
            *w = w.max(v);
        }
    }
    outcome(
        passed == 10,
        format!(
            "{passed}/10; worst |e-e_sd| {:.1e}, spread {:.1e}, |q| {:.1e}, restart dev {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn closed_form() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_x: f64 = 0.0;
    let mut worst_l: f64 = 0.0;
    let mut done = 0;
    while done < 20 {
        let n = rng.gen_range(2..=10);
        let agents: Vec<AgentProfile> = (0..n)
            .map(|_| {
                AgentProfile::new(
                    rng.gen_range(0.0..5.0),
                    rng.gen_range(0.3..2.0),
                    rng.gen_range(4.0..10.0),
                )
                .unwrap()
            })
            .collect();
        let inst =
            MarketInstance::new(star_graph(n, vec![1.0; 2 * (n - 1)]).unwrap(), agents).unwrap();
        let cf = standard_ce_closed_form(&inst);
        if cf.x.iter().any(|&x| x <= 1e-6) {
            continue;
        }
        let num = solve_standard_swe(&inst, &opts()).unwrap();
        worst_x = worst_x.max(max_abs(cf.x.iter().zip(&num.x).map(|(a, b)| a - b)));
        worst_l = worst_l.max((cf.lambda0 - num.lambda0).abs());
        done += 1;
    }
    outcome(
        worst_x <= 1e-6 && worst_l <= 1e-6,
        format!("20 instances, max |dx| {worst_x:.2e}, max |dlambda0| {worst_l:.2e}"),
    )
}

fn lattice(rng: &mut ChaCha8Rng, lo: u32, hi: u32) -> f64 {
    rng.gen_range(lo..=hi) as f64 * 0.05
}

/// Welfare program with the implied bounds made explicit so that every
/// coordinate the oracle enumerates has a finite range.
fn bounded(inst: &MarketInstance) -> ConvexProgram {
    let mut p = assemble_swe(inst);
    let net = inst.network();
    let n = inst.n();
    for (i, ag) in inst.agents().iter().enumerate() {
        let (lo, hi) = net.capacity_bounds(i).unwrap();
        p.upper[i] = ag.a - lo;
        p.lower[n + i] = lo;
        p.upper[n + i] = hi;
    }
    for (k, &u) in net.capacities().iter().enumerate() {
        p.upper[2 * n + k] = u;
    }
    p
}

fn satisfies(p: &ConvexProgram, z: &[f64], tol: f64) -> bool {
    let dot = |c: &[f64]| c.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
    p.eq.iter().all(|r| (dot(&r.coeffs) - r.rhs).abs() <= tol)
        && p.ineq.iter().all(|r| dot(&r.coeffs) <= r.rhs + tol)
        && z.iter().zip(&p.lower).all(|(v, l)| *v >= l - tol)
        && z.iter().zip(&p.upper).all(|(v, u)| *v <= u + tol)
}

fn oracle_equivalence() -> Outcome {
    let topologies: [(usize, Vec<(usize, usize)>); 4] = [
        (2, vec![(0, 1), (1, 0)]),
        (3, vec![(0, 1), (1, 2)]),
        (3, vec![(0, 1), (2, 1)]),
        (3, vec![(0, 1), (1, 2), (2, 0)]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut passed = 0;
    let mut worst: f64 = 0.0;
    for t in 0..25 {
        let (n, arcs) = &topologies[t % topologies.len()];
        let caps = arcs.iter().map(|_| lattice(&mut rng, 1, 30)).collect();
        let net = FlowNetwork::new(*n, arcs.clone(), caps).unwrap();
        let agents = (0..*n)
            .map(|_| {
                AgentProfile::new(
                    lattice(&mut rng, 0, 60),
                    rng.gen_range(0.5..2.0),
                    rng.gen_range(0.0..4.0),
                )
                .unwrap()
            })
            .collect();
        let inst = MarketInstance::new(net, agents).unwrap();
        let program = bounded(&inst);
        let grid = brute_force_qp(&program, 0.01).unwrap();
        let sol = solve_swe(&inst, &opts()).unwrap();
        let z: Vec<f64> = sol.x.iter().chain(&sol.e).chain(&sol.y).copied().collect();
        let obj = program.objective(&z);
        let gap = (obj - grid.objective).abs();
        worst = worst.max(gap);
        if gap <= 0.02 && obj <= grid.objective + 1e-9 && satisfies(&program, &z, 1e-7) {
            passed += 1;
        }
    }
    outcome(
        passed == 25,
        format!("{passed}/25 within 0.02 and feasible, worst gap {worst:.2e}"),
    )
}

fn monotone(seq: &[f64], nonincreasing: bool) -> bool {
    seq.windows(2).all(|w| {
        if nonincreasing {
            w[1] <= w[0]
        } else {
            w[1] >= w[0]
        }
    })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn capacity_sweep() -> Outcome {
    let runs: Vec<(Vec<f64>, Vec<f64>)> = (1..=10)
        .map(|seed| {
            let mut cfg = ExperimentConfig::defaults(3).unwrap();
            cfg.seed = seed;
            let r = run_experiment3(&cfg).unwrap();
            (
                r.records.iter().map(|x| x.metrics.q_inf_norm).collect(),
                r.records.iter().map(|x| x.metrics.e_l1_norm).collect(),
            )
        })
        .collect();
    let gammas = ExperimentConfig::defaults(3).unwrap().gammas;
    let g = gammas.len();
    let med = |pick: fn(&Series) -> &Vec<f64>| -> Vec<f64> {
        (0..g)
            .map(|j| median(runs.iter().map(|r| pick(r)[j]).collect()))
            .collect()
    };
    let q_med = med(|r| &r.0);
    let e_med = med(|r| &r.1);
    let inversions = |pick: fn(&Series) -> &Vec<f64>, nonincreasing: bool| -> usize {
        (0..g - 1)
            .map(|j| {
                runs.iter()
                    .filter(|r| {
                        let (a, b) = (pick(r)[j], pick(r)[j + 1]);
                        if nonincreasing {
                            b > a
                        } else {
                            b < a
                        }
                    })
                    .count()
            })
            .max()
            .unwrap_or(0)
    };
    let q_inv = inversions(|r| &r.0, true);
    let e_inv = inversions(|r| &r.1, false);
    let ok = monotone(&q_med, true) && monotone(&e_med, false) && q_inv <= 1 && e_inv <= 1;
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.3}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    outcome(
        ok,
        format!(
            "median |q|inf [{}], median |e|1 [{}], max inversions per pair q {q_inv} e {e_inv}",
            fmt(&q_med),
            fmt(&e_med)
        ),
    )
}

fn social_shaping() -> Outcome {
    let cfg = ExperimentConfig::defaults(4).unwrap();
    let report = run_experiment4(&cfg).unwrap();
    let s = report.shaping.unwrap();
    let ok = s.membership.in_sstar && s.prices.passed == 100 && s.prices.trials.len() == 100;
    outcome(
        ok,
        format!(
            "membership {}, {}/100 equal and positive, worst spread {:.1e}, min price {:.3}",
            if s.membership.in_sstar { "in" } else { "out" },
            s.prices.passed,
            s.prices.worst_spread,
            s.prices.min_price
        ),
    )
}

fn star_construction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_res: f64 = 0.0;
    let mut min_slack = f64::INFINITY;
    for _ in 0..100 {
        let n = rng.gen_range(3..=5);
        let caps: Vec<f64> = (0..2 * (n - 1)).map(|_| rng.gen_range(0.5..2.0)).collect();
        let net = star_graph(n, caps).unwrap();
        let e = loop {
            let mut e = vec![0.0; n];
            for (i, v) in e.iter_mut().enumerate().skip(1) {
                let (lo, hi) = net.capacity_bounds(i).unwrap();
                *v = rng.gen_range(0.95 * lo..0.95 * hi);
            }
            e[0] = -e[1..].iter().sum::<f64>();
            let (lo, hi) = net.capacity_bounds(0).unwrap();
            if lo < e[0] && e[0] < hi {
                break e;
            }
        };
        let y = star_flow_construct(&net, &e).unwrap();
        let flow = net.net_flow(&y).unwrap();
        worst_res = worst_res.max(max_abs(flow.iter().zip(&e).map(|(a, b)| a - b)));
        for (v, u) in y.iter().zip(net.capacities()) {
            min_slack = min_slack.min(v.min(u - v));
        }
    }
    outcome(
        worst_res <= 1e-10 && min_slack >= 1e-9,
        format!("100 stars, max net-flow residual {worst_res:.1e}, min slack {min_slack:.3e}"),
    )
}

fn interior_equal_prices() -> Outcome {
    let ranges = AgentRanges {
        a: [0.0, 5.0],
        theta1: [0.5, 0.6],
        theta2: [18.0, 20.0],
    };
    let mut found = 0;
    let mut passed = 0;
    let mut worst: f64 = 0.0;
    let mut seed = 0;
    while found < 20 && seed < 2000 {
        seed += 1;
        let net = generate_er(6, 8, 1.0, 4.0, seed).unwrap();
        let inst = MarketInstance::new(net, random_agents(6, &ranges, seed).unwrap()).unwrap();
        let std = solve_standard_swe(&inst, &opts()).unwrap();
        if !interior_check(inst.network(), &std.e, 1e-7, &opts())
            .unwrap()
            .is_interior
        {
            continue;
        }
        found += 1;
        let spread = equal_price_check(&solve_swe(&inst, &opts()).unwrap(), 1e-6);
        worst = worst.max(spread.max_spread);
        passed += spread.all_equal as usize;
    }
    outcome(
        found == 20 && passed == 20,
        format!("{passed}/{found} interior instances with equal prices, worst spread {worst:.1e}"),
    )
}

type Series = (Vec<f64>, Vec<f64>);
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() -> ExitCode {
    let batch = exp1_batch();
    let criteria: Vec<Criterion> = vec![
        ("1 equivalence suite", Box::new(|| equivalence(&batch))),
        (
            "2 price nonnegativity",
            Box::new(|| nonnegative_prices(&batch)),
        ),
        (
            "3 price identity and flow stationarity",
            Box::new(|| price_identity(&batch)),
        ),
        ("4 infinite-capacity collapse", Box::new(infinite_capacity)),
        ("5 closed-form agreement", Box::new(closed_form)),
        ("6 oracle equivalence", Box::new(oracle_equivalence)),
        ("7 capacity sweep trend", Box::new(capacity_sweep)),
        ("8 social shaping", Box::new(social_shaping)),
        ("9 star flow construction", Box::new(star_construction)),
        (
            "10 interior implies equal prices",
            Box::new(interior_equal_prices),
        ),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        failed += !result.passed as usize;
        println!(
            "{} criterion {name}: {} [{:.1}s]",
            if result.passed { "PASS" } else { "FAIL" },
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
