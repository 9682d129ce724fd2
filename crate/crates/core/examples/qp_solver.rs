//! The interior-point solver on its own, cross-checked by the grid oracle.

use flowmarket::qpcore::{brute_force_qp, solve, ConvexProgram, SolveOptions};

fn main() -> flowmarket::Result<()> {
    // minimize (x0 - 1)² + 2(x1 - 2)²  s.t.  x0 + x1 = 2,  x0 - x1 <= 1,  0 <= x <= 3
    let mut p = ConvexProgram::new(vec![2.0, 4.0], vec![-2.0, -8.0])?;
    p.constant = 9.0;
    p.add_eq(vec![1.0, 1.0], 2.0)?;
    p.add_ineq(vec![1.0, -1.0], 1.0)?;
    for j in 0..2 {
        p.set_bounds(j, 0.0, 3.0)?;
    }

    let r = solve(&p, &SolveOptions::default())?;
    println!("status {:?} after {} iterations", r.status, r.iterations);
    println!("x = {:.6?}, objective {:.6}", r.primal, r.objective_value);
    println!(
        "equality dual {:.6?}, inequality dual {:.6?}",
        r.duals.eq, r.duals.ineq
    );
    println!("worst KKT residual {:.1e}", r.kkt.worst());

    let grid = brute_force_qp(&p, 0.001)?;
    println!(
        "grid optimum {:.4?} ({:.6}) after {} points",
        grid.point, grid.objective, grid.evaluated
    );
    Ok(())
}
