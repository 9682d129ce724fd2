//! Shrinking arc capacities pulls trades toward zero and pushes the flow
//! duals away from zero.

use flowmarket::experiments::{run_experiment3, ExperimentConfig};

fn main() -> flowmarket::Result<()> {
    let mut cfg = ExperimentConfig::defaults(3)?;
    cfg.seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(7);
    let report = run_experiment3(&cfg)?;
    println!(
        "{:>7} {:>10} {:>10} {:>10} {:>8}",
        "gamma", "|q|inf", "|e|1", "spread", "verify"
    );
    for r in &report.records {
        println!(
            "{:>7} {:>10.4} {:>10.4} {:>10.4} {:>8}",
            r.gamma.unwrap_or_default(),
            r.metrics.q_inf_norm,
            r.metrics.e_l1_norm,
            r.metrics.price_spread,
            r.verification.passed
        );
    }
    Ok(())
}
