//! Restrict utilities to a parameter box and check that every admissible
//! profile on a star yields one common positive price.

use flowmarket::agents::{AgentProfile, MarketInstance};
use flowmarket::flownet::star_graph;
use flowmarket::shaping::{sstar_membership, validate_equal_prices};
use flowmarket::{ParamBox, SolveOptions};

fn main() -> flowmarket::Result<()> {
    let star = star_graph(5, vec![15.0; 8])?;
    let template = MarketInstance::new(star, vec![AgentProfile::new(25.0, 0.5, 18.0)?; 5])?;

    for pbox in [
        ParamBox::new(0.5, 0.6, 18.0, 20.0)?,
        ParamBox::new(0.5, 0.6, 10.0, 12.0)?,
    ] {
        let d = sstar_membership(&pbox, &template)?;
        let r = validate_equal_prices(&pbox, &template, 50, 3, 1e-6, &SolveOptions::with_tol(1e-9));
        println!(
            "theta1 {:?} theta2 {:?}: {} (cond1 {:.2} > {:.2}, min cond2 margin {:.2}), equal positive prices {}/50, worst spread {:.1e}",
            pbox.theta1(),
            pbox.theta2(),
            if d.in_sstar { "in S*" } else { "not in S*" },
            d.cond1_lhs,
            d.cond1_rhs,
            d.cond2_margins.iter().copied().fold(f64::INFINITY, f64::min),
            r.passed,
            r.worst_spread,
        );
    }
    Ok(())
}
