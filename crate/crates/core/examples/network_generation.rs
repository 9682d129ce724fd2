//! Connected Erdős–Rényi networks with antiparallel arcs.

use flowmarket::flownet::generate_er;

fn main() -> flowmarket::Result<()> {
    let net = generate_er(8, 10, 0.0, 2.0, 5)?;
    println!("{} nodes, {} arcs", net.node_count(), net.arc_count());
    for (k, (&(t, h), u)) in net.arcs().iter().zip(net.capacities()).enumerate().take(6) {
        println!("arc {:>2}: {} -> {}  u = {u:.3}", k + 1, t + 1, h + 1);
    }
    let inc = net.incidence();
    println!(
        "incidence is {}x{}, column sums all zero: {}",
        inc.a.nrows(),
        inc.a.ncols(),
        inc.a.row_sum().iter().all(|&s| s == 0.0)
    );
    for i in 0..3 {
        let (lo, hi) = net.capacity_bounds(i)?;
        println!("node {} can trade within [{lo:.3}, {hi:.3}]", i + 1);
    }
    println!(
        "{}",
        serde_json::to_string(&net).expect("network serializes")
    );
    Ok(())
}
