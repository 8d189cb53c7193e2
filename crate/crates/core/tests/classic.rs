use lobatto::benchmarks::{example1, run, Example1Solution, ProblemId, RunSpec};
use lobatto::costate::estimate_costate;
use lobatto::ocp::Mesh;
use lobatto::solver::{solve, SolverOptions};
use lobatto::transcription::{transcribe, Form};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn tight() -> SolverOptions {
    SolverOptions::with_tol(1e-12)
}

#[test]
fn control_error_decades() {
    for (n, expected) in [(6, 1e-1), (10, 1e-2)] {
        let out = run(&RunSpec::new(ProblemId::Ex1, Form::Classic, Mesh::single(n).unwrap(), tight()), &Example1Solution)
            .unwrap();
        assert!(out.solution.converged());
        let e = out.report.e_control;
        eprintln!("classic N={n}: control error {e:.3e}");
        assert!(e >= expected / 10.0 && e <= expected * 10.0, "N={n}: {e:e}");
    }
}

/// The classic collocation conditions leave one direction of the multipliers
/// free. Different starting points reach the same primal solution with
/// different costates.
#[test]
fn multipliers_are_not_unique() {
    let ocp = example1().unwrap();
    let p = transcribe(&ocp, &Mesh::single(30).unwrap(), Form::Classic, None).unwrap();
    let exact = Example1Solution;
    let nodes_t = p.blocks[0].times.clone();
    let costate_error = |lam: &nalgebra::DMatrix<f64>| {
        nodes_t.iter().enumerate().fold(0.0f64, |a, (i, &t)| a.max((lam[(i, 0)] - exact.costate(t)).abs()))
    };
    let base = solve(&p, &p.initial_guess(), &tight()).unwrap();
    assert!(base.converged());
    let base_lam = estimate_costate(&p, &base).unwrap().lambda.remove(0);
    let mut rng = StdRng::seed_from_u64(30);
    let mut spread: f64 = 0.0;
    for _ in 0..4 {
        let guess: Vec<f64> = p.initial_guess().iter().map(|v| v * (1.0 + rng.gen_range(-0.1..0.1))).collect();
        let sol = solve(&p, &guess, &tight()).unwrap();
        if !sol.converged() {
            continue;
        }
        let ds = (p.states(&sol.primal) - p.states(&base.primal)).amax();
        assert!(ds <= 1e-9, "states differ by {ds:e}");
        assert!((sol.objective - base.objective).abs() <= 1e-12);
        let lam = estimate_costate(&p, &sol).unwrap().lambda.remove(0);
        eprintln!("costate error {:.3e} (exact-solution guess {:.3e})", costate_error(&lam), costate_error(&base_lam));
        spread = spread.max((&lam - &base_lam).amax());
    }
    assert!(spread > 1e-6, "costates coincide: {spread:e}");
}

#[test]
fn filtered_costate_error_largest_near_endpoints() {
    let mut spec = RunSpec::new(ProblemId::Ex1, Form::Classic, Mesh::single(30).unwrap(), tight());
    spec.filter = true;
    let out = run(&spec, &Example1Solution).unwrap();
    let lam = &out.measured_costate[0];
    let times = &out.problem.blocks[0].times;
    let err: Vec<f64> = times.iter().enumerate().map(|(i, &t)| (lam[(i, 0)] - Example1Solution.costate(t)).abs()).collect();
    let worst = (0..err.len()).max_by(|&a, &b| err[a].total_cmp(&err[b])).unwrap();
    eprintln!("max filtered costate error {:.2e}", err.iter().fold(0.0, |a: f64, b| a.max(*b)));
    assert!(worst < 3 || worst >= err.len() - 3, "largest error at node {worst}");
}
