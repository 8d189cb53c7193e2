//! Error studies: single solves measured against a reference, sweeps over N
//! or over uniform meshes, and the superfluous-point study of the second
//! integral form.

use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmarks::problems::{example1, example2, Example1Solution};
use crate::benchmarks::reference::{FineReference, Reference};
use crate::costate::{estimate_costate, filter_costate, CostateEstimate};
use crate::error::{Error, Result};
use crate::ocp::{Mesh, OcpDefinition};
use crate::solver::{solve, NlpSolution, SolverOptions};
use crate::transcription::{transcribe, uniform_grid, DenseTrajectory, Form, NlpProblem};

/// Samples used for the dense-state RMSE.
pub const RMSE_SAMPLES: usize = 1000;

/// Errors above this are pre-asymptotic and left out of order fits when they
/// occur at the coarsest mesh.
pub const PRE_ASYMPTOTIC_ERROR: f64 = 1e-1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemId {
    Ex1,
    Ex2,
}

impl ProblemId {
    /// Solver tolerance used when a run does not set one.
    pub fn default_tol(&self) -> f64 {
        match self {
            ProblemId::Ex1 => 1e-14,
            ProblemId::Ex2 => 1e-8,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProblemId::Ex1 => "ex1",
            ProblemId::Ex2 => "ex2",
        }
    }

    pub fn ocp(&self) -> Result<OcpDefinition> {
        match self {
            ProblemId::Ex1 => example1(),
            ProblemId::Ex2 => example2(),
        }
    }

    /// The analytic solution for `ex1`, the cached fine-mesh solution for `ex2`.
    pub fn reference(&self, cache_dir: Option<&Path>) -> Result<Box<dyn Reference>> {
        Ok(match self {
            ProblemId::Ex1 => Box::new(Example1Solution),
            ProblemId::Ex2 => Box::new(FineReference::example2(cache_dir)?),
        })
    }
}

impl std::fmt::Display for ProblemId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ProblemId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ex1" => Ok(ProblemId::Ex1),
            "ex2" => Ok(ProblemId::Ex2),
            _ => Err(Error::Config(format!("unknown problem `{s}`, expected ex1 or ex2"))),
        }
    }
}

/// One solve to be measured.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub problem: ProblemId,
    pub form: Form,
    pub mesh: Mesh,
    pub tau_extra: Option<f64>,
    pub solver: SolverOptions,
    /// Smooth the classic-form costate before measuring it.
    pub filter: bool,
}

impl RunSpec {
    pub fn new(problem: ProblemId, form: Form, mesh: Mesh, solver: SolverOptions) -> Self {
        Self { problem, form, mesh, tau_extra: None, solver, filter: false }
    }
}

/// Errors of one solve against the reference. Node errors are maxima over all
/// nodes and components; mesh errors only look at interval endpoints, where
/// the integral forms superconverge.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub problem: ProblemId,
    pub form: Form,
    pub intervals: usize,
    /// Points of the first interval.
    pub points: usize,
    pub nodes: usize,
    /// Largest interval length in time units.
    pub h: f64,
    pub tau_extra: Option<f64>,
    pub filtered: bool,
    pub status: String,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub objective: f64,
    pub e_state: f64,
    pub e_control: f64,
    pub e_costate: f64,
    pub e_mesh_state: f64,
    pub e_mesh_control: f64,
    /// Error of the superconvergent mesh costate `p_k`; absent for the classic form.
    pub e_mesh_costate: Option<f64>,
    pub rmse_state: f64,
    /// Order of the mesh-point state error fitted over the sweep this report
    /// belongs to, when it has at least three mesh sizes.
    pub observed_order: Option<f64>,
}

impl ErrorReport {
    fn failed(spec: &RunSpec, ocp_span: f64, err: &Error) -> Self {
        Self {
            problem: spec.problem,
            form: spec.form,
            intervals: spec.mesh.intervals(),
            points: spec.mesh.points_per_interval[0],
            nodes: spec.mesh.total_nodes(),
            h: 0.5 * spec.mesh.max_h() * ocp_span,
            tau_extra: spec.tau_extra,
            filtered: spec.filter,
            status: format!("error: {err}"),
            iterations: 0,
            kkt_residual: f64::NAN,
            objective: f64::NAN,
            e_state: f64::NAN,
            e_control: f64::NAN,
            e_costate: f64::NAN,
            e_mesh_state: f64::NAN,
            e_mesh_control: f64::NAN,
            e_mesh_costate: None,
            rmse_state: f64::NAN,
            observed_order: None,
        }
    }

    pub fn converged(&self) -> bool {
        self.status == "converged"
    }
}

/// Everything produced by one measured solve.
pub struct RunOutcome {
    pub problem: NlpProblem,
    pub solution: NlpSolution,
    pub costate: CostateEstimate,
    /// Node costate that was measured: filtered when requested, per interval.
    pub measured_costate: Vec<DMatrix<f64>>,
    pub report: ErrorReport,
}

fn max_abs(acc: f64, v: f64) -> f64 {
    acc.max(v.abs())
}

/// Transcribe, solve, estimate costates and measure against `reference`.
pub fn run(spec: &RunSpec, reference: &dyn Reference) -> Result<RunOutcome> {
    let ocp = spec.problem.ocp()?;
    let problem = transcribe(&ocp, &spec.mesh, spec.form, spec.tau_extra)?;
    let solution = solve(&problem, &problem.initial_guess(), &spec.solver)?;
    let costate = estimate_costate(&problem, &solution)?;
    let measured_costate = if spec.filter {
        if spec.form != Form::Classic {
            return Err(Error::Config("the costate filter applies to the classic form only".into()));
        }
        vec![filter_costate(&problem.blocks[0].ops.rule.nodes, &costate.lambda[0])?]
    } else {
        costate.lambda.clone()
    };
    let report = measure(spec, &problem, &solution, &costate, &measured_costate, reference)?;
    Ok(RunOutcome { problem, solution, costate, measured_costate, report })
}

fn measure(
    spec: &RunSpec,
    problem: &NlpProblem,
    solution: &NlpSolution,
    costate: &CostateEstimate,
    node_costate: &[DMatrix<f64>],
    reference: &dyn Reference,
) -> Result<ErrorReport> {
    let ocp = &problem.ocp;
    let x = &solution.primal;
    let k_count = problem.blocks.len();
    let (mut e_state, mut e_control, mut e_costate) = (0.0, 0.0, 0.0);
    let (mut e_mesh_state, mut e_mesh_control) = (0.0, 0.0);
    for (k, b) in problem.blocks.iter().enumerate() {
        let xs = problem.interval_states(x, k);
        let us = problem.interval_controls(x, k);
        let last = b.n() - 1;
        for (j, &t) in b.times.iter().enumerate() {
            let at_mesh = j == 0 || j == last;
            let rs = reference.state(t);
            let ru = reference.control(t);
            let rl = reference.costate(t);
            for i in 0..ocp.n_x {
                let es = xs[(j, i)] - rs[i];
                e_state = max_abs(e_state, es);
                e_costate = max_abs(e_costate, node_costate[k][(j, i)] - rl[i]);
                if at_mesh {
                    e_mesh_state = max_abs(e_mesh_state, es);
                }
            }
            for l in 0..ocp.n_u {
                let eu = ocp.control_difference(l, us[(j, l)], ru[l]);
                e_control = max_abs(e_control, eu);
                if at_mesh {
                    e_mesh_control = max_abs(e_mesh_control, eu);
                }
            }
        }
    }
    let e_mesh_costate = costate.mesh_costate.as_ref().map(|p| {
        (0..=k_count).fold(0.0, |acc, k| {
            let rp = reference.mesh_costate(ocp.time_of(problem.mesh.boundaries[k]));
            (0..ocp.n_x).fold(acc, |a, i| max_abs(a, p[(k, i)] - rp[i]))
        })
    });
    let dense = DenseTrajectory::new(problem, x)?;
    let grid = uniform_grid(RMSE_SAMPLES);
    let sq: f64 = grid
        .iter()
        .map(|&tau| {
            let r = reference.state(ocp.time_of(tau));
            dense.state(tau).iter().zip(&r).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
        })
        .sum();
    let rmse_state = (sq / (grid.len() * ocp.n_x) as f64).sqrt();
    Ok(ErrorReport {
        problem: spec.problem,
        form: spec.form,
        intervals: k_count,
        points: spec.mesh.points_per_interval[0],
        nodes: spec.mesh.total_nodes(),
        h: 0.5 * spec.mesh.max_h() * (ocp.tf - ocp.t0),
        tau_extra: spec.tau_extra,
        filtered: spec.filter,
        status: solution.status.to_string(),
        iterations: solution.iterations,
        kkt_residual: solution.kkt_residual,
        objective: solution.objective,
        e_state,
        e_control,
        e_costate,
        e_mesh_state,
        e_mesh_control,
        e_mesh_costate,
        rmse_state,
        observed_order: None,
    })
}

/// Runs every spec on the worker pool. A failed point becomes a report with
/// its error in `status`; results keep the order of `specs`.
pub fn run_error_study(specs: &[RunSpec], reference: &dyn Reference) -> Vec<ErrorReport> {
    specs
        .par_iter()
        .map(|spec| match run(spec, reference) {
            Ok(out) => out.report,
            Err(e) => {
                log::warn!("{} {} K={}: {e}", spec.problem, spec.form, spec.mesh.intervals());
                let span = spec.problem.ocp().map(|o| o.tf - o.t0).unwrap_or(f64::NAN);
                ErrorReport::failed(spec, span, &e)
            }
        })
        .collect()
}

/// Least-squares slopes of `log(error)` against `log(h)`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ObservedOrders {
    pub state: Option<f64>,
    pub control: Option<f64>,
    pub costate: Option<f64>,
    pub mesh_state: Option<f64>,
    pub mesh_control: Option<f64>,
    pub mesh_costate: Option<f64>,
}

/// Slope of the least-squares line through `(log h, log e)`. The coarsest
/// point is dropped when its error is pre-asymptotic. Needs three sizes, and
/// two usable points after dropping; non-positive or non-finite errors make
/// the fit unavailable.
pub fn observed_order(h: &[f64], e: &[f64]) -> Option<f64> {
    if h.len() < 3 || h.len() != e.len() {
        return None;
    }
    let mut pts: Vec<(f64, f64)> = h.iter().copied().zip(e.iter().copied()).collect();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    if pts[0].1 > PRE_ASYMPTOTIC_ERROR {
        pts.remove(0);
    }
    if pts.len() < 2 || pts.iter().any(|&(h, e)| !(h > 0.0 && e > 0.0 && e.is_finite())) {
        return None;
    }
    let n = pts.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = pts.iter().map(|&(h, e)| (h.ln(), e.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

impl ObservedOrders {
    pub fn fit(reports: &[ErrorReport]) -> Self {
        let ok: Vec<&ErrorReport> = reports.iter().filter(|r| r.converged()).collect();
        let h: Vec<f64> = ok.iter().map(|r| r.h).collect();
        let fit = |f: &dyn Fn(&ErrorReport) -> f64| observed_order(&h, &ok.iter().map(|r| f(r)).collect::<Vec<_>>());
        Self {
            state: fit(&|r| r.e_state),
            control: fit(&|r| r.e_control),
            costate: fit(&|r| r.e_costate),
            mesh_state: fit(&|r| r.e_mesh_state),
            mesh_control: fit(&|r| r.e_mesh_control),
            mesh_costate: if ok.iter().all(|r| r.e_mesh_costate.is_some()) {
                fit(&|r| r.e_mesh_costate.unwrap_or(f64::NAN))
            } else {
                None
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub reports: Vec<ErrorReport>,
    pub orders: Option<ObservedOrders>,
}

/// Uniform meshes of `intervals[i]` intervals with `n_points` each.
pub fn mesh_sweep(
    problem: ProblemId,
    form: Form,
    n_points: usize,
    intervals: &[usize],
    solver: &SolverOptions,
    reference: &dyn Reference,
) -> Result<SweepResult> {
    let specs = intervals
        .iter()
        .map(|&k| Ok(RunSpec::new(problem, form, Mesh::uniform(k, n_points)?, *solver)))
        .collect::<Result<Vec<_>>>()?;
    let mut reports = run_error_study(&specs, reference);
    let orders = (intervals.len() >= 3).then(|| ObservedOrders::fit(&reports));
    if let Some(o) = &orders {
        for r in &mut reports {
            r.observed_order = o.mesh_state;
        }
    }
    Ok(SweepResult { reports, orders })
}

/// Single-interval solves for each `N` in `points`.
pub fn points_sweep(
    problem: ProblemId,
    form: Form,
    points: &[usize],
    solver: &SolverOptions,
    filter: bool,
    reference: &dyn Reference,
) -> Result<SweepResult> {
    let specs = points
        .iter()
        .map(|&n| {
            let mut s = RunSpec::new(problem, form, Mesh::single(n)?, *solver);
            s.filter = filter;
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { reports: run_error_study(&specs, reference), orders: None })
}

/// One `τ_{N+1}` of the superfluous-point study.
#[derive(Debug, Clone, Serialize)]
pub struct TauExtraRow {
    pub tau_extra: f64,
    pub status: String,
    /// Max node-wise difference of `(X_{1:N}, U)` from the integral form.
    pub max_node_delta: f64,
    pub extra_state: Vec<f64>,
    pub rmse_state: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TauExtraStudy {
    pub n_points: usize,
    pub integral_rmse_state: f64,
    pub rows: Vec<TauExtraRow>,
    /// Grid values dropped for lying within `1e-8` of a node.
    pub skipped: Vec<f64>,
}

impl TauExtraStudy {
    pub fn max_node_delta(&self) -> f64 {
        self.rows.iter().map(|r| r.max_node_delta).fold(0.0, f64::max)
    }

    /// `max / min` of the state RMSE over the grid.
    pub fn rmse_ratio(&self) -> f64 {
        let hi = self.rows.iter().map(|r| r.rmse_state).fold(0.0, f64::max);
        let lo = self.rows.iter().map(|r| r.rmse_state).fold(f64::INFINITY, f64::min);
        hi / lo
    }
}

/// `count` equally spaced interior points of `(-1, 1)`.
pub fn interior_grid(count: usize) -> Vec<f64> {
    (1..=count).map(|i| -1.0 + 2.0 * i as f64 / (count + 1) as f64).collect()
}

/// Solves the second integral form of example 1 on one interval of
/// `n_points` for each `τ_{N+1}` in `grid` and compares against the integral
/// form.
pub fn run_tau_extra_study(n_points: usize, grid: &[f64], solver: &SolverOptions) -> Result<TauExtraStudy> {
    let reference = Example1Solution;
    let base = run(&RunSpec::new(ProblemId::Ex1, Form::Integral, Mesh::single(n_points)?, *solver), &reference)?;
    if !base.solution.converged() {
        return Err(Error::SolverFailure(format!(
            "integral-form solve for N = {n_points} ended with {}",
            base.solution.status
        )));
    }
    let nodes = base.problem.blocks[0].ops.rule.nodes.clone();
    let (kept, skipped): (Vec<f64>, Vec<f64>) =
        grid.iter().partition(|&&t| nodes.iter().all(|&s| (t - s).abs() > 1e-8));
    let base_nodes = node_values(&base.problem, &base.solution.primal);
    let rows = kept
        .par_iter()
        .map(|&te| {
            let mut spec = RunSpec::new(ProblemId::Ex1, Form::SecondIntegral, Mesh::single(n_points)?, *solver);
            spec.tau_extra = Some(te);
            let out = run(&spec, &reference)?;
            let delta = node_values(&out.problem, &out.solution.primal)
                .iter()
                .zip(&base_nodes)
                .fold(0.0, |acc, (a, b)| max_abs(acc, a - b));
            Ok(TauExtraRow {
                tau_extra: te,
                status: out.report.status,
                max_node_delta: delta,
                extra_state: out.problem.extra_state(&out.solution.primal).unwrap_or_default(),
                rmse_state: out.report.rmse_state,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TauExtraStudy { n_points, integral_rmse_state: base.report.rmse_state, rows, skipped })
}

/// Node states followed by node controls.
fn node_values(problem: &NlpProblem, x: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = problem.states(x).iter().copied().collect();
    for k in 0..problem.blocks.len() {
        v.extend(problem.interval_controls(x, k).iter());
    }
    v
}
