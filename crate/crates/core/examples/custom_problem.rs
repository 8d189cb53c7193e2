//! Define a problem with the builder: reach x = 1 at t = 1 with the least
//! accumulated control energy, `min z(1)` with `x' = u`, `z' = u²/2`.
//! The optimum is `u = 1`, `z(1) = 1/2`.
//!
//! ```text
//! cargo run --release --example custom_problem
//! ```

use lobatto::costate::estimate_costate;
use lobatto::ocp::{Mesh, OcpDefinition};
use lobatto::solver::{solve, SolverOptions};
use lobatto::transcription::{transcribe, Form};
use nalgebra::DMatrix;

fn main() -> lobatto::Result<()> {
    let ocp = OcpDefinition::builder("energy", 2, 1)
        .horizon(0.0, 1.0)
        .dynamics(|_, _, u| vec![u[0], 0.5 * u[0] * u[0]])
        .dynamics_jacobians(
            |_, _, _| DMatrix::zeros(2, 2),
            |_, _, u| DMatrix::from_column_slice(2, 1, &[1.0, u[0]]),
        )
        .objective(|e| e.xf[1])
        .boundary(3, |e| vec![e.x0[0], e.x0[1], e.xf[0] - 1.0])
        .endpoint_guess(vec![0.0, 0.0], vec![1.0, 0.0])
        .build()?;
    let problem = transcribe(&ocp, &Mesh::uniform(4, 4)?, Form::DerivativeLike, None)?;
    let sol = solve(&problem, &problem.initial_guess(), &SolverOptions::with_tol(1e-12))?;
    let costate = estimate_costate(&problem, &sol)?;
    println!("{} in {} iterations, z(1) = {:.12}", sol.status, sol.iterations, sol.objective);
    for k in 0..problem.blocks.len() {
        let u = problem.interval_controls(&sol.primal, k);
        println!("interval {k}: u = {:?}", u.iter().map(|v| format!("{v:.10}")).collect::<Vec<_>>());
    }
    if let Some(p) = &costate.mesh_costate {
        println!("mesh costate p_x = {:?}", p.column(0).iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>());
    }
    Ok(())
}
