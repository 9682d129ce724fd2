//! Solve a market stored as JSON, e.g. an `instance.json` written by the
//! `flowmarket` binary.
//!
//!     cargo run --example load_instance -- out/instance.json

use std::fs;

use flowmarket::equilibria::{solve_swe, verify_ce};
use flowmarket::{MarketInstance, SolveOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = match std::env::args().nth(1) {
        Some(path) => fs::read_to_string(path)?,
        None => r#"{
            "network": {"n": 3, "arcs": [[1, 2], [2, 1], [2, 3], [3, 2]], "u": [0.5, 0.5, 1.0, 1.0]},
            "agents": [
                {"a": 4.0, "theta1": 1.0, "theta2": 2.0},
                {"a": 1.0, "theta1": 1.0, "theta2": 3.0},
                {"a": 0.0, "theta1": 0.5, "theta2": 4.0}
            ]
        }"#
        .to_string(),
    };
    let inst: MarketInstance = serde_json::from_str(&text)?;
    let sol = solve_swe(&inst, &SolveOptions::with_tol(1e-9))?;
    let report = verify_ce(&inst, &sol, 1e-6)?;
    println!("{}", serde_json::to_string_pretty(&sol)?);
    println!("competitive equilibrium: {}", report.passed);
    Ok(())
}
