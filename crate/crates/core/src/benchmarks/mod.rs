//! Benchmark problems, reference solutions and convergence studies.
pub mod problems;
pub mod reference;
pub mod study;
pub use problems::{example1, example2, Example1Solution, OrbitConstants};
pub use reference::{default_cache_dir, FineReference, Reference};
pub use study::{run, run_error_study, ErrorReport, ProblemId, RunSpec};
