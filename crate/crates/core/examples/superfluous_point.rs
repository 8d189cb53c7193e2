//! The extra support point of the second integral form does not move the
//! node solution.
//!
//! ```text
//! cargo run --release --example superfluous_point
//! ```

use lobatto::benchmarks::study::{interior_grid, run_tau_extra_study};
use lobatto::solver::SolverOptions;

fn main() -> lobatto::Result<()> {
    let study = run_tau_extra_study(10, &interior_grid(21), &SolverOptions::with_tol(1e-12))?;
    println!("{:>8} {:>12} {:>12} {:>14}", "tau", "node delta", "rmse", "X_extra");
    for r in &study.rows {
        println!("{:8.4} {:12.3e} {:12.4e} {:14.10}", r.tau_extra, r.max_node_delta, r.rmse_state, r.extra_state[0]);
    }
    println!(
        "integral form rmse {:.4e}; max delta {:.3e}; rmse max/min {:.6}",
        study.integral_rmse_state,
        study.max_node_delta(),
        study.rmse_ratio()
    );
    Ok(())
}
