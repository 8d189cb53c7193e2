//! Integral and derivative-like forms give the same node solution; their
//! multipliers are related by the transform of the integration block.
//!
//! ```text
//! cargo run --release --example form_equivalence
//! ```

use lobatto::benchmarks::example1;
use lobatto::costate::multiplier_transform;
use lobatto::ocp::Mesh;
use lobatto::solver::{solve, SolverOptions};
use lobatto::transcription::{transcribe, Form};

fn main() -> lobatto::Result<()> {
    let ocp = example1()?;
    let opts = SolverOptions::with_tol(1e-12);
    let mut solved = Vec::new();
    for form in [Form::Integral, Form::DerivativeLike] {
        let p = transcribe(&ocp, &Mesh::single(10)?, form, None)?;
        let s = solve(&p, &p.initial_guess(), &opts)?;
        println!("{form}: {} in {} iterations", s.status, s.iterations);
        solved.push((p, s));
    }
    let (pi, si) = &solved[0];
    let (pd, sd) = &solved[1];
    let dx = si.primal.iter().zip(&sd.primal).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let m = pi.interval_multipliers(&si.multipliers, 0);
    let s = pd.interval_multipliers(&sd.multipliers, 0);
    let ds = (multiplier_transform(&m, &pi.blocks[0].ops.a_tilde) - s).amax();
    println!("max node difference {dx:.3e}, multiplier relation residual {ds:.3e}");
    Ok(())
}
