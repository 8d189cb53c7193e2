use std::collections::HashSet;

use lobatto::benchmarks::{example1, example2, run, Example1Solution, ProblemId, RunSpec};
use lobatto::ocp::Mesh;
use lobatto::solver::{jacobian_check, solve, Nlp, SolverOptions};
use lobatto::transcription::{state_extension, transcribe, Form};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn tight() -> SolverOptions {
    SolverOptions::with_tol(1e-12)
}

#[test]
fn jacobians_match_differences_inside_the_pattern() {
    let mut rng = StdRng::seed_from_u64(3);
    for ocp in [example1().unwrap(), example2().unwrap()] {
        for mesh in [Mesh::uniform(3, 4).unwrap(), Mesh::new(vec![-1.0, -0.2, 1.0], vec![3, 6]).unwrap(), Mesh::single(7).unwrap()] {
            for form in Form::ALL {
                if form.single_interval_only() && !mesh.is_single() {
                    continue;
                }
                let p = transcribe(&ocp, &mesh, form, None).unwrap();
                let pattern: HashSet<(usize, usize)> = p.jacobian_pattern().into_iter().collect();
                for _ in 0..3 {
                    let x: Vec<f64> = p
                        .initial_guess()
                        .iter()
                        .map(|v| v + rng.gen_range(-0.1..0.1) * v.abs().max(1.0))
                        .collect();
                    let rel = jacobian_check(&p, &x).unwrap();
                    assert!(rel <= 1e-6, "{} {form}: {rel:e}", ocp.name);
                    for &(i, j, v) in &p.jacobian(&x).unwrap().entries {
                        assert!(v == 0.0 || pattern.contains(&(i, j)), "{} {form}: ({i}, {j}) outside pattern", ocp.name);
                    }
                }
            }
        }
    }
}

#[test]
fn objective_matches_analytic_optimum() {
    let out = run(&RunSpec::new(ProblemId::Ex1, Form::Integral, Mesh::single(14).unwrap(), tight()), &Example1Solution).unwrap();
    assert!(out.solution.converged());
    let gap = (out.solution.objective - Example1Solution.objective()).abs();
    assert!(gap <= 1e-9, "{gap:e}");
}

#[test]
fn extra_point_placement_leaves_nodes_unchanged() {
    let ocp = example1().unwrap();
    let mesh = Mesh::single(10).unwrap();
    let base_p = transcribe(&ocp, &mesh, Form::Integral, None).unwrap();
    let base = solve(&base_p, &base_p.initial_guess(), &tight()).unwrap();
    for te in [-0.5, 0.0, 0.7] {
        let p = transcribe(&ocp, &mesh, Form::SecondIntegral, Some(te)).unwrap();
        let sol = solve(&p, &p.initial_guess(), &tight()).unwrap();
        assert!(sol.converged(), "tau_extra {te}");
        let ds = (p.states(&sol.primal) - base_p.states(&base.primal)).amax();
        let du = (p.interval_controls(&sol.primal, 0) - base_p.interval_controls(&base.primal, 0)).amax();
        assert!(ds.max(du) <= 1e-9, "tau_extra {te}: {ds:e} {du:e}");

        // the extra state equals the post-hoc extension of the integral solution
        let ops = &p.blocks[0].ops;
        let f = base_p.interval_dynamics(&base.primal, 0).unwrap();
        let xs = base_p.interval_states(&base.primal, 0);
        let (ext, _) = state_extension(&xs, &f, ops, p.blocks[0].delta).unwrap();
        let solved = p.extra_state(&sol.primal).unwrap();
        assert!((ext[0] - solved[0]).abs() <= 1e-10, "tau_extra {te}: {} vs {}", ext[0], solved[0]);
    }
}

#[test]
fn dense_state_rmse_at_ten_points() {
    let out = run(&RunSpec::new(ProblemId::Ex1, Form::Integral, Mesh::single(10).unwrap(), tight()), &Example1Solution).unwrap();
    assert!(out.report.rmse_state <= 1e-5, "{:e}", out.report.rmse_state);
}
