//! The classic rank-deficient LGL scheme next to the integral form, with and
//! without the costate filter.
//!
//! ```text
//! cargo run --release --example classic_filter
//! ```

use lobatto::benchmarks::study::{points_sweep, ProblemId};
use lobatto::benchmarks::Example1Solution;
use lobatto::solver::SolverOptions;
use lobatto::transcription::Form;

fn main() -> lobatto::Result<()> {
    let opts = SolverOptions::with_tol(1e-12);
    let sizes = [8, 10, 14, 20, 30];
    let integral = points_sweep(ProblemId::Ex1, Form::Integral, &sizes, &opts, false, &Example1Solution)?;
    let classic = points_sweep(ProblemId::Ex1, Form::Classic, &sizes, &opts, false, &Example1Solution)?;
    let filtered = points_sweep(ProblemId::Ex1, Form::Classic, &sizes, &opts, true, &Example1Solution)?;
    println!("{:>3} {:>12} {:>12} {:>12} {:>12}", "N", "classic u", "classic lam", "filtered", "integral lam");
    for ((i, c), f) in integral.reports.iter().zip(&classic.reports).zip(&filtered.reports) {
        println!("{:3} {:12.3e} {:12.3e} {:12.3e} {:12.3e}", i.points, c.e_control, c.e_costate, f.e_costate, i.e_costate);
    }
    Ok(())
}
