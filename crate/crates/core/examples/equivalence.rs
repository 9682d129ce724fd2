//! Solve the planner's problem on a random market and check that the
//! recovered prices support it as a competitive equilibrium.
//!
//!     cargo run --example equivalence -- 42

use flowmarket::equilibria::{solve_swe, verify_ce};
use flowmarket::experiments::{base_instance, ExperimentConfig};
use flowmarket::SolveOptions;

fn main() -> flowmarket::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);
    let mut cfg = ExperimentConfig::defaults(1)?;
    cfg.seed = seed;

    let inst = base_instance(&cfg)?;
    let sol = solve_swe(&inst, &SolveOptions::with_tol(1e-9))?;
    let report = verify_ce(&inst, &sol, 1e-6)?;

    println!(
        "{:>5} {:>9} {:>9} {:>9} {:>9}",
        "agent", "x", "e", "lambda", "-q"
    );
    for i in 0..inst.n() {
        println!(
            "{:>5} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            i + 1,
            sol.x[i],
            sol.e[i],
            sol.lambda[i],
            -sol.q[i]
        );
    }
    println!("beta = {:.6} (lambda = -q - beta)", sol.beta);
    for (name, c) in report.conditions() {
        println!(
            "{name:<26} {} {:.2e}",
            if c.passed { "ok  " } else { "FAIL" },
            c.residual
        );
    }
    println!(
        "congested arcs: {}",
        sol.xi.iter().filter(|&&x| x > 1e-9).count()
    );
    Ok(())
}
