//! Uniform-mesh sweep on the scalar benchmark: mesh-point errors of state,
//! control and the mesh costate decay like h^(2N-2).
//!
//! ```text
//! cargo run --release --example mesh_convergence -- 4
//! ```

use lobatto::benchmarks::study::{mesh_sweep, ProblemId};
use lobatto::benchmarks::Example1Solution;
use lobatto::solver::SolverOptions;
use lobatto::transcription::Form;

fn main() -> lobatto::Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(3);
    let sweep = mesh_sweep(
        ProblemId::Ex1,
        Form::Integral,
        n,
        &[4, 8, 16, 32],
        &SolverOptions::with_tol(1e-12),
        &Example1Solution,
    )?;
    println!("{:>4} {:>10} {:>12} {:>12} {:>12} {:>12}", "K", "h", "mesh state", "mesh p", "node state", "node costate");
    for r in &sweep.reports {
        println!(
            "{:4} {:10.4} {:12.3e} {:12.3e} {:12.3e} {:12.3e}",
            r.intervals,
            r.h,
            r.e_mesh_state,
            r.e_mesh_costate.unwrap_or(f64::NAN),
            r.e_state,
            r.e_costate
        );
    }
    if let Some(o) = sweep.orders {
        println!("observed orders (target {}):", 2 * n - 2);
        println!("  mesh state {:.2}  mesh control {:.2}  mesh costate {:.2}", o.mesh_state.unwrap_or(f64::NAN), o.mesh_control.unwrap_or(f64::NAN), o.mesh_costate.unwrap_or(f64::NAN));
        println!("  node costate {:.2}", o.costate.unwrap_or(f64::NAN));
    }
    Ok(())
}
