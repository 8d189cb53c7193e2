//! Reference solutions used as error targets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::basis::Interpolant;
use crate::benchmarks::problems::{example2, Example1Solution};
use crate::costate::{estimate_costate, CostateEstimate};
use crate::error::{Error, Result};
use crate::ocp::Mesh;
use crate::solver::{evaluate, solve, Nlp, NlpSolution, SolverOptions};
use crate::transcription::{transcribe, DenseTrajectory, Form, NlpProblem};

/// A trajectory that errors are measured against, in time units.
pub trait Reference: Sync {
    fn state(&self, t: f64) -> Vec<f64>;
    fn control(&self, t: f64) -> Vec<f64>;
    fn costate(&self, t: f64) -> Vec<f64>;
    /// Costate used for mesh-point comparisons.
    fn mesh_costate(&self, t: f64) -> Vec<f64> {
        self.costate(t)
    }
}

impl Reference for Example1Solution {
    fn state(&self, t: f64) -> Vec<f64> {
        vec![Example1Solution::state(self, t)]
    }

    fn control(&self, t: f64) -> Vec<f64> {
        vec![Example1Solution::control(self, t)]
    }

    fn costate(&self, t: f64) -> Vec<f64> {
        vec![Example1Solution::costate(self, t)]
    }
}

pub const REFERENCE_INTERVALS: usize = 40;
pub const REFERENCE_POINTS: usize = 8;
pub const REFERENCE_TOL: f64 = 1e-10;
const CACHE_SCHEMA: u32 = 1;

/// Fine-mesh integral-form solution of the orbit problem with its mesh
/// costate, evaluated between nodes by per-interval interpolation.
pub struct FineReference {
    pub problem: NlpProblem,
    pub solution: NlpSolution,
    pub costate: CostateEstimate,
    dense: DenseTrajectory,
    node_costate: Vec<Interpolant>,
    mesh_times: Vec<f64>,
}

#[derive(Serialize, Deserialize, PartialEq, Debug, Clone)]
struct CacheKey {
    schema: u32,
    problem: String,
    intervals: usize,
    points: usize,
    tol: f64,
    version: String,
}

#[derive(Serialize, Deserialize)]
struct CachePayload {
    key: CacheKey,
    primal: Vec<f64>,
    multipliers: Vec<f64>,
    iterations: usize,
    kkt_residual: f64,
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    sha256: String,
    payload: CachePayload,
}

fn payload_hash(p: &CachePayload) -> Result<String> {
    Ok(hex::encode(Sha256::digest(serde_json::to_vec(p)?)))
}

/// `LOBATTO_CACHE_DIR`, or `lobatto-cache` under the system temp directory.
pub fn default_cache_dir() -> PathBuf {
    std::env::var_os("LOBATTO_CACHE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("lobatto-cache"))
}

fn reference_key() -> CacheKey {
    CacheKey {
        schema: CACHE_SCHEMA,
        problem: "ex2".into(),
        intervals: REFERENCE_INTERVALS,
        points: REFERENCE_POINTS,
        tol: REFERENCE_TOL,
        version: env!("CARGO_PKG_VERSION").into(),
    }
}

fn load_cached(path: &Path, key: &CacheKey, n_vars: usize, n_cons: usize) -> Option<CachePayload> {
    let text = std::fs::read_to_string(path).ok()?;
    let file: CacheFile = serde_json::from_str(&text).ok()?;
    let ok = file.payload.key == *key
        && payload_hash(&file.payload).ok()? == file.sha256
        && file.payload.primal.len() == n_vars
        && file.payload.multipliers.len() == n_cons;
    if !ok {
        log::warn!("ignoring stale or corrupt reference cache {}", path.display());
    }
    ok.then_some(file.payload)
}

/// Copy of `x` with every periodic control shifted by whole periods so that
/// consecutive nodes, in time order, differ by at most half a period. The
/// interpolated control is then continuous where the solution is.
pub fn unwrap_controls(problem: &NlpProblem, x: &[f64]) -> Vec<f64> {
    let mut out = x.to_vec();
    for (l, period) in problem.ocp.control_periods.iter().enumerate() {
        let Some(p) = *period else { continue };
        let mut prev: Option<f64> = None;
        for (k, b) in problem.blocks.iter().enumerate() {
            for j in 0..b.n() {
                let v = problem.control_var(k, j, l);
                if let Some(q) = prev {
                    out[v] -= p * ((out[v] - q) / p).round();
                }
                prev = Some(out[v]);
            }
        }
    }
    out
}

impl FineReference {
    /// Orbit-raising reference: 40 uniform intervals of 8 points, tolerance
    /// 1e-10. Loaded from `cache_dir` when a matching, intact cache file is
    /// present; otherwise solved and written there. `None` disables caching.
    pub fn example2(cache_dir: Option<&Path>) -> Result<Self> {
        let ocp = example2()?;
        let mesh = Mesh::uniform(REFERENCE_INTERVALS, REFERENCE_POINTS)?;
        let problem = transcribe(&ocp, &mesh, Form::Integral, None)?;
        let key = reference_key();
        let path = cache_dir.map(|d| d.join("ex2_reference.json"));
        let cached = path.as_deref().and_then(|p| load_cached(p, &key, problem.n_vars(), problem.n_cons()));
        let solution = match cached {
            Some(c) => {
                log::info!("loaded orbit reference from cache");
                let mut s = evaluate(&problem, c.primal, c.multipliers, REFERENCE_TOL)?;
                s.iterations = c.iterations;
                s
            }
            None => {
                let s = solve(&problem, &problem.initial_guess(), &SolverOptions::with_tol(REFERENCE_TOL))?;
                if !s.converged() {
                    return Err(Error::SolverFailure(format!(
                        "orbit reference solve ended with {} at kkt {:.3e}",
                        s.status, s.kkt_residual
                    )));
                }
                if let Some(p) = &path {
                    let payload = CachePayload {
                        key,
                        primal: s.primal.clone(),
                        multipliers: s.multipliers.clone(),
                        iterations: s.iterations,
                        kkt_residual: s.kkt_residual,
                    };
                    let file = CacheFile { sha256: payload_hash(&payload)?, payload };
                    if let Some(d) = p.parent() {
                        std::fs::create_dir_all(d)?;
                    }
                    let tmp = p.with_extension("json.tmp");
                    std::fs::write(&tmp, serde_json::to_vec(&file)?)?;
                    std::fs::rename(&tmp, p)?;
                }
                s
            }
        };
        Self::from_solution(problem, solution)
    }

    pub fn from_solution(problem: NlpProblem, solution: NlpSolution) -> Result<Self> {
        let costate = estimate_costate(&problem, &solution)?;
        let dense = DenseTrajectory::new(&problem, &unwrap_controls(&problem, &solution.primal))?;
        let node_costate = costate
            .lambda
            .iter()
            .zip(&problem.blocks)
            .map(|(l, b)| Interpolant::new(&b.ops.rule.nodes, l.clone()))
            .collect::<Result<Vec<_>>>()?;
        let mesh_times = problem.mesh.boundaries.iter().map(|&b| problem.ocp.time_of(b)).collect();
        Ok(Self { problem, solution, costate, dense, node_costate, mesh_times })
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let tau = self.problem.ocp.tau_of(t);
        let b = &self.problem.mesh.boundaries;
        let k = b[1..b.len() - 1].partition_point(|&v| v <= tau).min(b.len() - 2);
        let s = (2.0 * (tau - b[k]) / (b[k + 1] - b[k]) - 1.0).clamp(-1.0, 1.0);
        (k, s)
    }
}

impl Reference for FineReference {
    fn state(&self, t: f64) -> Vec<f64> {
        self.dense.state(self.problem.ocp.tau_of(t))
    }

    fn control(&self, t: f64) -> Vec<f64> {
        self.dense.control(self.problem.ocp.tau_of(t))
    }

    fn costate(&self, t: f64) -> Vec<f64> {
        let (k, s) = self.locate(t);
        self.node_costate[k].eval(s)
    }

    /// The superconvergent mesh costate where `t` is a reference mesh point,
    /// node costate interpolation elsewhere.
    fn mesh_costate(&self, t: f64) -> Vec<f64> {
        let scale = self.mesh_times.last().unwrap().abs().max(1.0);
        let p = self.costate.mesh_costate.as_ref().expect("integral form has a mesh costate");
        match self.mesh_times.iter().position(|&m| (m - t).abs() <= 1e-12 * scale) {
            Some(k) => p.row(k).iter().copied().collect(),
            None => self.costate(t),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn unwrapping_removes_period_jumps() {
        let ocp = example2().unwrap();
        let problem = transcribe(&ocp, &Mesh::uniform(2, 3).unwrap(), Form::Integral, None).unwrap();
        let smooth = [0.5, 1.5, 2.5, 2.5, 3.5, 4.5];
        let mut x = problem.initial_guess();
        let mut i = 0;
        for k in 0..2 {
            for j in 0..3 {
                let v = smooth[i] + if i % 2 == 1 { -TAU } else { 2.0 * TAU };
                x[problem.control_var(k, j, 0)] = v;
                i += 1;
            }
        }
        let out = unwrap_controls(&problem, &x);
        let first = out[problem.control_var(0, 0, 0)];
        let mut i = 0;
        for k in 0..2 {
            for j in 0..3 {
                let v = out[problem.control_var(k, j, 0)];
                assert!((v - first - (smooth[i] - smooth[0])).abs() < 1e-12);
                i += 1;
            }
        }
        assert!(ocp.control_difference(0, PI - 0.1, -PI + 0.1).abs() < 0.2 + 1e-12);
    }

    #[test]
    fn non_periodic_controls_untouched() {
        let ocp = crate::benchmarks::example1().unwrap();
        let problem = transcribe(&ocp, &Mesh::single(4).unwrap(), Form::Integral, None).unwrap();
        let mut x = problem.initial_guess();
        x[problem.control_var(0, 2, 0)] = 40.0;
        assert_eq!(unwrap_controls(&problem, &x), x);
        assert_eq!(ocp.control_difference(0, 40.0, 0.0), 40.0);
    }
}
