use lobatto::benchmarks::study::{mesh_sweep, RunOutcome};
use lobatto::benchmarks::{example1, run, Example1Solution, ProblemId, RunSpec};
use lobatto::costate::{adjoint_residual, costate_from_derivative_like, estimate_costate, filter_costate, multiplier_transform};
use lobatto::ocp::{Mesh, OcpDefinition};
use lobatto::operators::CollocationOperators;
use lobatto::solver::{solve, SolverOptions};
use lobatto::transcription::{transcribe, Form};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn tight() -> SolverOptions {
    SolverOptions::with_tol(1e-12)
}

fn ex1(form: Form, mesh: Mesh) -> RunOutcome {
    let out = run(&RunSpec::new(ProblemId::Ex1, form, mesh, tight()), &Example1Solution).unwrap();
    assert!(out.solution.converged(), "{form}");
    out
}

#[test]
fn both_costate_maps_agree_at_thirty_points() {
    let int = ex1(Form::Integral, Mesh::single(30).unwrap());
    let der = ex1(Form::DerivativeLike, Mesh::single(30).unwrap());
    let gap = (&int.costate.lambda[0] - &der.costate.lambda[0]).amax();
    assert!(gap <= 1e-8, "{gap:e}");

    // mapping the integral multipliers through S = Ã_(:,2:N)ᵀ M reproduces Λ
    let ops = &int.problem.blocks[0].ops;
    let m = int.problem.interval_multipliers(&int.solution.multipliers, 0);
    let lam = costate_from_derivative_like(&multiplier_transform(&m, &ops.a_tilde), &ops.rule, &ops.alpha);
    assert!((&lam - &int.costate.lambda[0]).amax() <= 1e-12);
}

#[test]
fn adjoint_residuals_vanish_at_convergence() {
    let tol = 1e-11;
    for form in [Form::Integral, Form::DerivativeLike] {
        for n in [6, 12, 20] {
            let p = transcribe(&example1().unwrap(), &Mesh::single(n).unwrap(), form, None).unwrap();
            let sol = solve(&p, &p.initial_guess(), &SolverOptions::with_tol(tol)).unwrap();
            assert!(sol.converged());
            let (d, i) = adjoint_residual(&p, &sol).unwrap();
            // the differential form carries 1/w scaling of the stationarity rows
            let w_min = p.blocks[0].ops.rule.weights.iter().copied().fold(f64::INFINITY, f64::min);
            assert!(i.amax() <= 10.0 * tol, "{form} N={n}: integral {:e}", i.amax());
            assert!(d.amax() * w_min <= 10.0 * tol, "{form} N={n}: differential {:e}", d.amax());
        }
    }
}

#[test]
fn transversality_and_initial_condition() {
    let out = ex1(Form::Integral, Mesh::single(20).unwrap());
    let lam = &out.costate.lambda[0];
    assert!((lam[(19, 0)] + 1.0).abs() <= 1e-8);
    assert!(out.costate.terminal_gap[0].abs() <= 1e-8);
    assert!(out.costate.initial_gap[0].abs() <= 1e-8);
}

#[test]
fn mesh_costate_at_start_of_eight_intervals() {
    let out = ex1(Form::Integral, Mesh::uniform(8, 3).unwrap());
    let p = out.costate.mesh_costate.as_ref().unwrap();
    let exact = -16.0 / ((-5.0f64).exp() + 6.0 + 9.0 * 5.0f64.exp());
    assert!((exact - Example1Solution.costate(0.0)).abs() < 1e-15);
    let h: f64 = 0.25;
    let err = (p[(0, 0)] - exact).abs();
    eprintln!("p(0) = {:.10e}, exact {exact:.10e}, error {err:e}", p[(0, 0)]);
    assert!(err <= h.powi(4) * exact.abs(), "{err:e}");
}

#[test]
fn constant_state_has_unit_costate() {
    let ocp = OcpDefinition::builder("still", 1, 1)
        .horizon(0.0, 1.0)
        .dynamics(|_, _, _| vec![0.0])
        .dynamics_jacobians(|_, _, _| DMatrix::zeros(1, 1), |_, _, _| DMatrix::zeros(1, 1))
        .objective(|e| -e.xf[0])
        .objective_gradient(|_| (vec![0.0], vec![-1.0]))
        .initial_state(vec![2.0])
        .guess(|_| (vec![2.0], vec![0.0]))
        .build()
        .unwrap();
    // u does not enter; the regularised Newton steps leave it at the guess
    let p = transcribe(&ocp, &Mesh::uniform(3, 4).unwrap(), Form::Integral, None).unwrap();
    let sol = solve(&p, &p.initial_guess(), &tight()).unwrap();
    let est = estimate_costate(&p, &sol).unwrap();
    for l in &est.lambda {
        assert!(l.iter().all(|v| (v + 1.0).abs() <= 1e-10), "{l}");
    }
    assert!(est.mesh_costate.unwrap().iter().all(|v| (v + 1.0).abs() <= 1e-10));
}

#[test]
fn mesh_costate_beats_node_costate_order() {
    let sweep = mesh_sweep(ProblemId::Ex1, Form::Integral, 3, &[4, 8, 16, 32], &tight(), &Example1Solution).unwrap();
    let o = sweep.orders.unwrap();
    let (mesh, node) = (o.mesh_costate.unwrap(), o.costate.unwrap());
    eprintln!("mesh costate order {mesh:.3}, node costate order {node:.3}");
    assert!(mesh - node >= 1.0);
}

proptest! {
    #[test]
    fn filter_is_linear_and_keeps_lines(n in 8usize..24, a in -3.0f64..3.0, b in -3.0f64..3.0, seed in 0u64..1000) {
        let ops = CollocationOperators::new(n).unwrap();
        let t = &ops.rule.nodes;
        let x = DMatrix::from_fn(n, 1, |i, _| ((i as u64 * 7 + seed) as f64).sin());
        let y = DMatrix::from_fn(n, 1, |i, _| ((i as u64 * 3 + seed) as f64).cos());
        let lhs = filter_costate(t, &(&x * a + &y * b)).unwrap();
        let rhs = filter_costate(t, &x).unwrap() * a + filter_costate(t, &y).unwrap() * b;
        prop_assert!((lhs - rhs).amax() <= 1e-12);
        let c = DMatrix::from_element(n, 1, a);
        prop_assert!((filter_costate(t, &c).unwrap() - &c).amax() <= 1e-12);
    }
}
