//! With effectively unlimited arcs the network stops mattering: trades and
//! prices match the market without any flow constraints.

use flowmarket::equilibria::{
    equal_price_check, solve_standard_swe, solve_swe, standard_ce_closed_form,
};
use flowmarket::experiments::{base_instance, ExperimentConfig};
use flowmarket::SolveOptions;

fn main() -> flowmarket::Result<()> {
    let cfg = ExperimentConfig::defaults(2)?;
    let base = base_instance(&cfg)?;
    let inst = base.with_network(base.network().with_uniform_capacity(1e6)?)?;
    let opts = SolveOptions::with_tol(1e-9);

    let sol = solve_swe(&inst, &opts)?;
    let std = solve_standard_swe(&inst, &opts)?;
    let closed = standard_ce_closed_form(&inst);

    let gap = sol
        .e
        .iter()
        .zip(&std.e)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let spread = equal_price_check(&sol, 1e-6);
    println!("max |e - e_sd|      {gap:.2e}");
    println!("price spread        {:.2e}", spread.max_spread);
    println!("lambda0 numeric     {:.9}", std.lambda0);
    println!("lambda0 closed form {:.9}", closed.lambda0);
    println!(
        "network prices      {:.9} .. {:.9}",
        spread.min_price,
        spread.min_price + spread.max_spread
    );
    Ok(())
}
