//! Explicit interior flows on a star, checked against the max-slack LP.

use flowmarket::equilibria::{interior_check, star_flow_construct};
use flowmarket::flownet::star_graph;
use flowmarket::SolveOptions;

fn main() -> flowmarket::Result<()> {
    let net = star_graph(4, vec![2.0, 1.0, 3.0, 1.5, 2.5, 0.5])?;
    let e = [0.6, -0.9, 0.5, -0.2];
    for (i, ei) in e.iter().enumerate() {
        let (lo, hi) = net.capacity_bounds(i)?;
        println!("node {}: e = {ei:5.2} in ({lo:.1}, {hi:.1})", i + 1);
    }
    let y = star_flow_construct(&net, &e)?;
    println!("constructed y = {y:.3?}");
    println!("net flow      = {:.3?}", net.net_flow(&y)?);

    let lp = interior_check(&net, &e, 1e-7, &SolveOptions::default())?;
    println!(
        "max uniform margin t* = {:.4}, interior: {}",
        lp.slack, lp.is_interior
    );
    Ok(())
}
