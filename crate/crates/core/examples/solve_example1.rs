//! Solve the scalar benchmark on one interval and compare with the analytic
//! state, control and costate.
//!
//! ```text
//! cargo run --release --example solve_example1 -- 12
//! ```

use lobatto::benchmarks::{example1, Example1Solution};
use lobatto::costate::estimate_costate;
use lobatto::ocp::Mesh;
use lobatto::solver::{solve, SolverOptions};
use lobatto::transcription::{transcribe, Form};

fn main() -> lobatto::Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10);
    let ocp = example1()?;
    let problem = transcribe(&ocp, &Mesh::single(n)?, Form::Integral, None)?;
    let sol = solve(&problem, &problem.initial_guess(), &SolverOptions::with_tol(1e-12))?;
    let costate = estimate_costate(&problem, &sol)?;
    println!("{} after {} iterations, objective {:.12e}", sol.status, sol.iterations, sol.objective);

    let exact = Example1Solution;
    let x = problem.interval_states(&sol.primal, 0);
    let u = problem.interval_controls(&sol.primal, 0);
    println!("{:>8} {:>12} {:>12} {:>12}", "t", "state err", "control err", "costate err");
    for (j, &t) in problem.blocks[0].times.iter().enumerate() {
        println!(
            "{t:8.4} {:12.3e} {:12.3e} {:12.3e}",
            (x[(j, 0)] - exact.state(t)).abs(),
            (u[(j, 0)] - exact.control(t)).abs(),
            (costate.lambda[0][(j, 0)] - exact.costate(t)).abs()
        );
    }
    println!("terminal gap {:.3e}", costate.terminal_gap[0]);
    Ok(())
}
