use lobatto::benchmarks::reference::REFERENCE_INTERVALS;
use lobatto::benchmarks::{default_cache_dir, run, FineReference, ProblemId, Reference, RunSpec};
use lobatto::ocp::Mesh;
use lobatto::solver::SolverOptions;
use lobatto::transcription::Form;

fn reference() -> FineReference {
    FineReference::example2(Some(&default_cache_dir())).unwrap()
}

/// Solves the orbit problem on `k` uniform intervals of 8 points. Returns the
/// largest state difference from the 40 x 8 reference over the mesh points
/// both meshes share, and the objective difference.
fn refined(reference: &FineReference, k: usize) -> (f64, f64) {
    let spec = RunSpec::new(ProblemId::Ex2, Form::Integral, Mesh::uniform(k, 8).unwrap(), SolverOptions::with_tol(1e-10));
    let out = run(&spec, reference).unwrap();
    assert!(out.solution.converged(), "K={k}");
    let p = &out.problem;
    let states = p.states(&out.solution.primal);
    // the meshes are nested, so every coarse mesh point is shared
    let step = (k / REFERENCE_INTERVALS).max(1);
    let mut worst: f64 = 0.0;
    for j in (0..=k).step_by(step) {
        let t = p.ocp.time_of(p.mesh.boundaries[j]);
        let r = reference.state(t);
        for (i, ri) in r.iter().enumerate() {
            worst = worst.max((states[(p.mesh.first_point(j), i)] - ri).abs());
        }
    }
    let dj = (out.solution.objective - reference.solution.objective).abs();
    eprintln!("{k}x8 vs 40x8: shared mesh states {worst:.3e}, objective {dj:.3e}");
    (worst, dj)
}

#[test]
fn orbit_reference_satisfies_boundary_conditions() {
    let reference = reference();
    let p = &reference.problem;
    let b = p.ocp.boundary(&p.endpoints(&reference.solution.primal)).unwrap();
    let worst = b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    assert!(worst <= 1e-10, "boundary residual {worst:e}");
    assert!(reference.solution.feasibility <= 1e-10);
}

/// Halving the reference mesh to 20 x 8 should move mesh states and the
/// objective by at most 1e-9.
#[test]
fn halved_reference_mesh_agrees() {
    let reference = reference();
    let (ds, dj) = refined(&reference, 20);
    assert!(ds <= 1e-9, "mesh states differ by {ds:e}");
    assert!(dj <= 1e-9, "objective differs by {dj:e}");
}

#[test]
fn doubled_reference_mesh_agrees() {
    let reference = reference();
    let (ds, dj) = refined(&reference, 80);
    assert!(ds <= 1e-9, "mesh states differ by {ds:e}");
    assert!(dj <= 1e-9, "objective differs by {dj:e}");
}

#[test]
fn cache_round_trip_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let solved = FineReference::example2(Some(dir.path())).unwrap();
    let path = dir.path().join("ex2_reference.json");
    assert!(path.exists());
    let loaded = FineReference::example2(Some(dir.path())).unwrap();
    assert_eq!(solved.solution.primal, loaded.solution.primal);
    assert_eq!(solved.solution.multipliers, loaded.solution.multipliers);
    let t = 1.7;
    assert_eq!(solved.state(t), loaded.state(t));

    // a tampered payload fails its hash and is solved again
    let text = std::fs::read_to_string(&path).unwrap();
    let key = "\"primal\":[";
    let at = text.find(key).unwrap() + key.len();
    let tampered = format!("{}9{}", &text[..at], &text[at + 1..]);
    assert_ne!(tampered, text);
    std::fs::write(&path, tampered).unwrap();
    let again = FineReference::example2(Some(dir.path())).unwrap();
    assert_eq!(again.solution.primal, solved.solution.primal);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), text);
}
