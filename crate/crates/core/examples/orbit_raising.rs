//! Low-thrust orbit raising: solve on 20 intervals of 6 points and on one
//! interval of 64 points, measured against the cached fine-mesh solution.
//!
//! ```text
//! cargo run --release --example orbit_raising
//! ```

use lobatto::benchmarks::study::{run_error_study, ProblemId, RunSpec};
use lobatto::benchmarks::default_cache_dir;
use lobatto::ocp::Mesh;
use lobatto::solver::SolverOptions;
use lobatto::transcription::Form;

fn main() -> lobatto::Result<()> {
    env_logger::init();
    let reference = ProblemId::Ex2.reference(Some(&default_cache_dir()))?;
    let opts = SolverOptions::with_tol(1e-8);
    let specs = [Mesh::uniform(20, 6)?, Mesh::single(64)?]
        .into_iter()
        .map(|m| RunSpec::new(ProblemId::Ex2, Form::Integral, m, opts))
        .collect::<Vec<_>>();
    for r in run_error_study(&specs, reference.as_ref()) {
        println!(
            "K={:2} N={:2} {} in {} iterations: final radius {:.10}, state {:.2e}, control {:.2e}, costate {:.2e}, mesh costate {:.2e}",
            r.intervals,
            r.points,
            r.status,
            r.iterations,
            -r.objective,
            r.e_state,
            r.e_control,
            r.e_costate,
            r.e_mesh_costate.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
