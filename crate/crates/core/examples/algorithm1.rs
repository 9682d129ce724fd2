//! Approve utility boxes by sampling: a box passes when every sampled
//! unconstrained equilibrium can be carried by the network.

use flowmarket::agents::{AgentProfile, MarketInstance};
use flowmarket::flownet::star_graph;
use flowmarket::shaping::algorithm1_enumerate;
use flowmarket::{ParamBox, SolveOptions};

fn main() -> flowmarket::Result<()> {
    let template = MarketInstance::new(
        star_graph(5, vec![15.0; 8])?,
        vec![AgentProfile::new(25.0, 0.5, 18.0)?; 5],
    )?;
    let mut boxes = Vec::new();
    for t1 in [0.05, 0.2, 0.5] {
        for t2 in [5.0, 18.0, 30.0] {
            boxes.push(ParamBox::new(t1, t1 * 1.2, t2, t2 + 2.0)?);
        }
    }
    let report = algorithm1_enumerate(&template, &boxes, 40, 1, &SolveOptions::with_tol(1e-9))?;
    for a in &report.assessments {
        println!(
            "theta1 {:?} theta2 {:?}: {} (worst slack {:.3})",
            a.param_box.theta1(),
            a.param_box.theta2(),
            if a.approved { "approved" } else { "rejected" },
            a.worst_slack
        );
    }
    println!("{}", report.caveat);
    Ok(())
}
