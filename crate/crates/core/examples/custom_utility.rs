//! Any concave utility can be checked for concavity and for agent-level
//! optimality at given prices.

use flowmarket::agents::{concavity_check, numeric_best_payoff, QuadraticUtility, UtilityFunction};
use flowmarket::equilibria::agent_optimality_gap;

struct LogUtility(f64);

impl UtilityFunction for LogUtility {
    fn value(&self, x: f64) -> f64 {
        self.0 * (1.0 + x).ln()
    }
    fn marginal(&self, x: f64) -> f64 {
        self.0 / (1.0 + x)
    }
}

fn main() -> flowmarket::Result<()> {
    let grid: Vec<f64> = (0..=50).map(|k| k as f64 * 0.2).collect();
    let log = LogUtility(3.0);
    println!(
        "log utility concave: {}",
        concavity_check(&log, &grid, 1e-12)?
    );

    // At price 1 the agent consumes up to where 3/(1+x) = 1, i.e. x = 2.
    let (a, lambda) = (4.0, 1.0);
    println!(
        "best payoff {:.6}",
        numeric_best_payoff(&log, a, lambda, 10.0)
    );
    println!(
        "gap at (x=2, e=2): {:.2e}",
        agent_optimality_gap(&log, a, lambda, 2.0, 2.0, 10.0)
    );
    println!(
        "gap at (x=4, e=0): {:.2e}",
        agent_optimality_gap(&log, a, lambda, 4.0, 0.0, 10.0)
    );

    let quad = QuadraticUtility::new(0.5, 18.0)?;
    println!(
        "quadratic best response at lambda=5: {:?}",
        quad.best_response(25.0, 5.0)?
    );
    Ok(())
}
