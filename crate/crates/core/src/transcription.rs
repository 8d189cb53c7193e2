//! Transcription of an optimal control problem into an equality-constrained NLP.
//!
//! Every form produces, per mesh interval `k`, defect rows of the shape
//!
//! ```text
//! C_x X^(k) + C_f F^(k) = 0,     F^(k)_j = f(t_j, X_j, U_j)
//! ```
//!
//! | form            | rows  | `C_x`               | `C_f`          |
//! |-----------------|-------|---------------------|----------------|
//! | integral        | N-1   | `[1 | -I]`          | `(Δ/2) Ã`      |
//! | derivative-like | N-1   | `-(2/Δ) E`          | `[α | I]`      |
//! | second integral | N     | `[1 | -I]` on N+1   | `(Δ/2) B`      |
//! | classic         | N     | `-(2/Δ) D`          | `I`            |
//!
//! where `Δ` is the interval length in time units. Boundary rows `b = 0` follow
//! the defects.
//!
//! Variables are laid out as all state points (node-major, interior mesh points
//! shared by adjacent intervals), then the controls of every node of every
//! interval, then the extra state of the second integral form.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::Interpolant;
use crate::classic::classic_differentiation_matrix;
use crate::error::{Error, Result};
use crate::linalg::Triplets;
use crate::ocp::{Endpoints, Mesh, OcpDefinition};
use crate::operators::CollocationOperators;
use crate::solver::{Nlp, HESSIAN_STEP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Form {
    Integral,
    DerivativeLike,
    SecondIntegral,
    Classic,
}

impl Form {
    pub const ALL: [Form; 4] = [Form::Integral, Form::DerivativeLike, Form::SecondIntegral, Form::Classic];

    pub fn name(&self) -> &'static str {
        match self {
            Form::Integral => "integral",
            Form::DerivativeLike => "derivative-like",
            Form::SecondIntegral => "second-integral",
            Form::Classic => "classic",
        }
    }

    pub fn single_interval_only(&self) -> bool {
        matches!(self, Form::SecondIntegral | Form::Classic)
    }
}

impl std::fmt::Display for Form {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Form {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Form::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown form `{s}`")))
    }
}

/// What a constraint row means.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Defect { interval: usize, row: usize, component: usize },
    Boundary { index: usize },
}

/// One mesh interval of a transcription.
#[derive(Debug, Clone)]
pub struct IntervalBlock {
    pub ops: Arc<CollocationOperators>,
    /// Node times.
    pub times: Vec<f64>,
    /// Node positions on `[-1, 1]`.
    pub taus: Vec<f64>,
    /// Global state point of each `C_x` column.
    pub state_points: Vec<usize>,
    pub control_offset: usize,
    pub row_offset: usize,
    pub cx: DMatrix<f64>,
    pub cf: DMatrix<f64>,
    /// Interval length in time units.
    pub delta: f64,
    /// Row scale `s` with `canonical row = s · row`; canonical multipliers are
    /// the solver multipliers divided by `s`.
    pub row_scale: f64,
}

impl IntervalBlock {
    pub fn n(&self) -> usize {
        self.times.len()
    }

    pub fn rows(&self) -> usize {
        self.cx.nrows()
    }
}

#[derive(Clone)]
pub struct NlpProblem {
    pub ocp: OcpDefinition,
    pub mesh: Mesh,
    pub form: Form,
    pub blocks: Vec<IntervalBlock>,
    pub tau_extra: Option<f64>,
    n_vars: usize,
    n_cons: usize,
    n_state_points: usize,
    extra_offset: Option<usize>,
    boundary_offset: usize,
}

impl std::fmt::Debug for NlpProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NlpProblem")
            .field("problem", &self.ocp.name)
            .field("form", &self.form)
            .field("intervals", &self.mesh.intervals())
            .field("n_vars", &self.n_vars)
            .field("n_cons", &self.n_cons)
            .finish()
    }
}

pub fn transcribe_integral(ocp: &OcpDefinition, mesh: &Mesh) -> Result<NlpProblem> {
    transcribe(ocp, mesh, Form::Integral, None)
}

pub fn transcribe_derivative_like(ocp: &OcpDefinition, mesh: &Mesh) -> Result<NlpProblem> {
    transcribe(ocp, mesh, Form::DerivativeLike, None)
}

pub fn transcribe_second_integral(ocp: &OcpDefinition, mesh: &Mesh, tau_extra: Option<f64>) -> Result<NlpProblem> {
    transcribe(ocp, mesh, Form::SecondIntegral, tau_extra)
}

/// Transcribe in any form. `tau_extra` only applies to the second integral
/// form; `None` selects the midpoint of the widest node gap.
pub fn transcribe(ocp: &OcpDefinition, mesh: &Mesh, form: Form, tau_extra: Option<f64>) -> Result<NlpProblem> {
    if form.single_interval_only() && !mesh.is_single() {
        return Err(Error::InvalidInput(format!(
            "the {form} form needs a single-interval mesh, got {} intervals",
            mesh.intervals()
        )));
    }
    let n_x = ocp.n_x;
    let n_u = ocp.n_u;
    let p_count = mesh.state_points();
    let controls_offset = p_count * n_x;
    let mut cache: HashMap<usize, Arc<CollocationOperators>> = HashMap::new();
    let mut blocks = Vec::with_capacity(mesh.intervals());
    let mut control_offset = controls_offset;
    let mut row_offset = 0;
    let extra_point = p_count;
    let mut used_tau_extra = None;
    for k in 0..mesh.intervals() {
        let n = mesh.points_per_interval[k];
        let ops = if form == Form::SecondIntegral {
            let o = match tau_extra {
                Some(t) => CollocationOperators::with_tau_extra(n, t)?,
                None => CollocationOperators::new(n)?,
            };
            used_tau_extra = Some(o.tau_extra);
            Arc::new(o)
        } else {
            match cache.get(&n) {
                Some(o) => o.clone(),
                None => {
                    let o = Arc::new(CollocationOperators::new(n)?);
                    cache.insert(n, o.clone());
                    o
                }
            }
        };
        let taus: Vec<f64> = ops.rule.nodes.iter().map(|&s| mesh.tau(k, s)).collect();
        let times: Vec<f64> = taus.iter().map(|&t| ocp.time_of(t)).collect();
        let delta = 0.5 * (ocp.tf - ocp.t0) * mesh.h(k);
        let first = mesh.first_point(k);
        let mut state_points: Vec<usize> = (first..first + n).collect();
        let (cx, cf, row_scale) = match form {
            Form::Integral => {
                let mut cx = DMatrix::zeros(n - 1, n);
                for r in 0..n - 1 {
                    cx[(r, 0)] = 1.0;
                    cx[(r, r + 1)] = -1.0;
                }
                (cx, &ops.a_tilde * (0.5 * delta), 1.0)
            }
            Form::DerivativeLike => {
                let cx = &ops.e * (-2.0 / delta);
                let mut cf = DMatrix::zeros(n - 1, n);
                for r in 0..n - 1 {
                    cf[(r, 0)] = ops.alpha[r];
                    cf[(r, r + 1)] = 1.0;
                }
                (cx, cf, 0.5 * delta)
            }
            Form::SecondIntegral => {
                state_points.push(extra_point);
                let mut cx = DMatrix::zeros(n, n + 1);
                for r in 0..n {
                    cx[(r, 0)] = 1.0;
                    cx[(r, r + 1)] = -1.0;
                }
                (cx, &ops.b * (0.5 * delta), 1.0)
            }
            Form::Classic => {
                let d = classic_differentiation_matrix(&ops.rule);
                (d * (-2.0 / delta), DMatrix::identity(n, n), 0.5 * delta)
            }
        };
        let rows = cx.nrows();
        blocks.push(IntervalBlock {
            ops,
            times,
            taus,
            state_points,
            control_offset,
            row_offset,
            cx,
            cf,
            delta,
            row_scale,
        });
        control_offset += n * n_u;
        row_offset += rows * n_x;
    }
    let extra_offset = (form == Form::SecondIntegral).then_some(control_offset);
    let n_vars = control_offset + if extra_offset.is_some() { n_x } else { 0 };
    Ok(NlpProblem {
        ocp: ocp.clone(),
        mesh: mesh.clone(),
        form,
        blocks,
        tau_extra: used_tau_extra,
        n_vars,
        n_cons: row_offset + ocp.n_b,
        n_state_points: p_count,
        extra_offset,
        boundary_offset: row_offset,
    })
}

impl NlpProblem {
    pub fn n_x(&self) -> usize {
        self.ocp.n_x
    }

    pub fn n_u(&self) -> usize {
        self.ocp.n_u
    }

    pub fn n_state_points(&self) -> usize {
        self.n_state_points
    }

    pub fn boundary_offset(&self) -> usize {
        self.boundary_offset
    }

    pub fn defect_rows(&self) -> usize {
        self.boundary_offset
    }

    /// Variable index of component `i` of state point `p`; the extra point of
    /// the second integral form has index `n_state_points()`.
    pub fn state_var(&self, p: usize, i: usize) -> usize {
        if p < self.n_state_points {
            p * self.ocp.n_x + i
        } else {
            self.extra_offset.expect("extra state only exists in the second integral form") + i
        }
    }

    pub fn control_var(&self, k: usize, j: usize, l: usize) -> usize {
        self.blocks[k].control_offset + j * self.ocp.n_u + l
    }

    pub fn row_kind(&self, row: usize) -> RowKind {
        if row >= self.boundary_offset {
            return RowKind::Boundary {
                index: row - self.boundary_offset,
            };
        }
        let k = self.blocks.partition_point(|b| b.row_offset <= row) - 1;
        let local = row - self.blocks[k].row_offset;
        RowKind::Defect {
            interval: k,
            row: local / self.ocp.n_x,
            component: local % self.ocp.n_x,
        }
    }

    /// Time of every state point, in order. The extra point is not included.
    pub fn state_point_times(&self) -> Vec<f64> {
        let mut t = vec![0.0; self.n_state_points];
        for b in &self.blocks {
            for (j, &tj) in b.times.iter().enumerate() {
                t[b.state_points[j]] = tj;
            }
        }
        t
    }

    pub fn state_point_taus(&self) -> Vec<f64> {
        let mut t = vec![0.0; self.n_state_points];
        for b in &self.blocks {
            for (j, &tj) in b.taus.iter().enumerate() {
                t[b.state_points[j]] = tj;
            }
        }
        t
    }

    /// All state points as a `P × n_x` matrix.
    pub fn states(&self, x: &[f64]) -> DMatrix<f64> {
        let n_x = self.ocp.n_x;
        DMatrix::from_fn(self.n_state_points, n_x, |p, i| x[p * n_x + i])
    }

    pub fn interval_states(&self, x: &[f64], k: usize) -> DMatrix<f64> {
        let b = &self.blocks[k];
        DMatrix::from_fn(b.n(), self.ocp.n_x, |j, i| x[self.state_var(b.state_points[j], i)])
    }

    pub fn interval_controls(&self, x: &[f64], k: usize) -> DMatrix<f64> {
        let b = &self.blocks[k];
        DMatrix::from_fn(b.n(), self.ocp.n_u, |j, l| x[self.control_var(k, j, l)])
    }

    /// `X_{N+1}` of the second integral form.
    pub fn extra_state(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.extra_offset.map(|o| x[o..o + self.ocp.n_x].to_vec())
    }

    fn node_state<'a>(&self, x: &'a [f64], b: &IntervalBlock, j: usize) -> &'a [f64] {
        let start = self.state_var(b.state_points[j], 0);
        &x[start..start + self.ocp.n_x]
    }

    fn node_control<'a>(&self, x: &'a [f64], k: usize, j: usize) -> &'a [f64] {
        let start = self.control_var(k, j, 0);
        &x[start..start + self.ocp.n_u]
    }

    /// Dynamics at every node of interval `k`, `N × n_x`.
    pub fn interval_dynamics(&self, x: &[f64], k: usize) -> Result<DMatrix<f64>> {
        let b = &self.blocks[k];
        let mut f = DMatrix::zeros(b.n(), self.ocp.n_x);
        for j in 0..b.n() {
            let fj = self
                .ocp
                .dynamics(b.times[j], self.node_state(x, b, j), self.node_control(x, k, j), (k, j))?;
            for i in 0..self.ocp.n_x {
                f[(j, i)] = fj[i];
            }
        }
        Ok(f)
    }

    pub fn endpoints(&self, x: &[f64]) -> Endpoints {
        let n_x = self.ocp.n_x;
        let last = self.n_state_points - 1;
        Endpoints {
            x0: x[..n_x].to_vec(),
            t0: self.ocp.t0,
            xf: x[last * n_x..(last + 1) * n_x].to_vec(),
            tf: self.ocp.tf,
        }
    }

    /// Solver multipliers of interval `k` rescaled to the canonical rows,
    /// `rows × n_x`. These are `M` (integral), `S` (derivative-like), and the
    /// collocation multipliers of the other forms.
    pub fn interval_multipliers(&self, lambda: &[f64], k: usize) -> DMatrix<f64> {
        let b = &self.blocks[k];
        let n_x = self.ocp.n_x;
        DMatrix::from_fn(b.rows(), n_x, |r, i| lambda[b.row_offset + r * n_x + i] / b.row_scale)
    }

    pub fn boundary_multipliers(&self, lambda: &[f64]) -> Vec<f64> {
        lambda[self.boundary_offset..].to_vec()
    }

    /// Initial guess vector from the problem's guess callback.
    pub fn initial_guess(&self) -> Vec<f64> {
        let n_x = self.ocp.n_x;
        let n_u = self.ocp.n_u;
        let mut v = vec![0.0; self.n_vars];
        for (p, t) in self.state_point_times().into_iter().enumerate() {
            let (xg, _) = self.ocp.guess(t);
            v[p * n_x..(p + 1) * n_x].copy_from_slice(&xg[..n_x]);
        }
        for (k, b) in self.blocks.iter().enumerate() {
            for (j, &t) in b.times.iter().enumerate() {
                let (_, ug) = self.ocp.guess(t);
                let o = self.control_var(k, j, 0);
                v[o..o + n_u].copy_from_slice(&ug[..n_u]);
            }
        }
        if let (Some(o), Some(te)) = (self.extra_offset, self.tau_extra) {
            let t = self.ocp.time_of(self.mesh.tau(0, te));
            let (xg, _) = self.ocp.guess(t);
            v[o..o + n_x].copy_from_slice(&xg[..n_x]);
        }
        v
    }

    /// Structural nonzeros of the dynamics part of the Jacobian.
    pub fn f_block_nonzeros(&self) -> usize {
        let n_x = self.ocp.n_x;
        let n_z = n_x + self.ocp.n_u;
        self.blocks
            .iter()
            .map(|b| b.cf.iter().filter(|v| **v != 0.0).count() * n_x * n_z)
            .sum()
    }

    /// Explicit structural sparsity pattern of the constraint Jacobian.
    pub fn jacobian_pattern(&self) -> Vec<(usize, usize)> {
        let n_x = self.ocp.n_x;
        let n_u = self.ocp.n_u;
        let mut pat = Vec::new();
        for (k, b) in self.blocks.iter().enumerate() {
            for r in 0..b.rows() {
                for i in 0..n_x {
                    let row = b.row_offset + r * n_x + i;
                    for (m, &p) in b.state_points.iter().enumerate() {
                        if b.cx[(r, m)] != 0.0 {
                            pat.push((row, self.state_var(p, i)));
                        }
                    }
                    for j in 0..b.n() {
                        if b.cf[(r, j)] != 0.0 {
                            for l in 0..n_x {
                                pat.push((row, self.state_var(b.state_points[j], l)));
                            }
                            for l in 0..n_u {
                                pat.push((row, self.control_var(k, j, l)));
                            }
                        }
                    }
                }
            }
        }
        let last = self.n_state_points - 1;
        for r in 0..self.ocp.n_b {
            for i in 0..n_x {
                pat.push((self.boundary_offset + r, self.state_var(0, i)));
                pat.push((self.boundary_offset + r, self.state_var(last, i)));
            }
        }
        pat.sort_unstable();
        pat.dedup();
        pat
    }

    /// Multiplier-weighted sums `σ_j = Σ_r C_f[r, j] λ_r` for each node of `k`.
    fn node_weights(&self, lambda: &[f64], k: usize) -> DMatrix<f64> {
        let b = &self.blocks[k];
        let n_x = self.ocp.n_x;
        let lam = DMatrix::from_fn(b.rows(), n_x, |r, i| lambda[b.row_offset + r * n_x + i]);
        b.cf.transpose() * lam
    }
}

impl Nlp for NlpProblem {
    fn n_vars(&self) -> usize {
        self.n_vars
    }

    fn n_cons(&self) -> usize {
        self.n_cons
    }

    fn objective(&self, x: &[f64]) -> Result<f64> {
        Ok(self.ocp.objective(&self.endpoints(x)))
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.n_vars];
        let (g0, gf) = self.ocp.objective_grad(&self.endpoints(x))?;
        let last = self.n_state_points - 1;
        for i in 0..self.ocp.n_x {
            g[self.state_var(0, i)] += g0[i];
            g[self.state_var(last, i)] += gf[i];
        }
        Ok(g)
    }

    fn constraints(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n_x = self.ocp.n_x;
        let mut c = vec![0.0; self.n_cons];
        for (k, b) in self.blocks.iter().enumerate() {
            let f = self.interval_dynamics(x, k)?;
            let xs = DMatrix::from_fn(b.state_points.len(), n_x, |m, i| x[self.state_var(b.state_points[m], i)]);
            let d = &b.cx * xs + &b.cf * f;
            for r in 0..b.rows() {
                for i in 0..n_x {
                    c[b.row_offset + r * n_x + i] = d[(r, i)];
                }
            }
        }
        let bv = self.ocp.boundary(&self.endpoints(x))?;
        c[self.boundary_offset..].copy_from_slice(&bv);
        Ok(c)
    }

    fn jacobian(&self, x: &[f64]) -> Result<Triplets> {
        let n_x = self.ocp.n_x;
        let n_u = self.ocp.n_u;
        let mut t = Triplets::new(self.n_cons, self.n_vars);
        for (k, b) in self.blocks.iter().enumerate() {
            let mut fx = Vec::with_capacity(b.n());
            let mut fu = Vec::with_capacity(b.n());
            for j in 0..b.n() {
                let xs = self.node_state(x, b, j);
                let us = self.node_control(x, k, j);
                fx.push(self.ocp.dynamics_jac_x(b.times[j], xs, us, (k, j))?);
                fu.push(self.ocp.dynamics_jac_u(b.times[j], xs, us, (k, j))?);
            }
            for r in 0..b.rows() {
                for i in 0..n_x {
                    let row = b.row_offset + r * n_x + i;
                    for (m, &p) in b.state_points.iter().enumerate() {
                        t.push(row, self.state_var(p, i), b.cx[(r, m)]);
                    }
                    for j in 0..b.n() {
                        let w = b.cf[(r, j)];
                        if w == 0.0 {
                            continue;
                        }
                        for l in 0..n_x {
                            t.push(row, self.state_var(b.state_points[j], l), w * fx[j][(i, l)]);
                        }
                        for l in 0..n_u {
                            t.push(row, self.control_var(k, j, l), w * fu[j][(i, l)]);
                        }
                    }
                }
            }
        }
        let (j0, jf) = self.ocp.boundary_jac(&self.endpoints(x))?;
        let last = self.n_state_points - 1;
        for r in 0..self.ocp.n_b {
            for i in 0..n_x {
                t.push(self.boundary_offset + r, self.state_var(0, i), j0[(r, i)]);
                t.push(self.boundary_offset + r, self.state_var(last, i), jf[(r, i)]);
            }
        }
        Ok(t)
    }

    /// Node-wise finite differences of the dynamics Jacobians weighted by the
    /// multipliers, plus the endpoint terms.
    fn hessian(&self, x: &[f64], lambda: &[f64]) -> Result<Triplets> {
        let n_x = self.ocp.n_x;
        let n_u = self.ocp.n_u;
        let n_z = n_x + n_u;
        let mut t = Triplets::new(self.n_vars, self.n_vars);
        for (k, b) in self.blocks.iter().enumerate() {
            let sigma = self.node_weights(lambda, k);
            for j in 0..b.n() {
                let s: Vec<f64> = sigma.row(j).iter().copied().collect();
                if s.iter().all(|v| *v == 0.0) {
                    continue;
                }
                let tj = b.times[j];
                let z: Vec<f64> = [self.node_state(x, b, j), self.node_control(x, k, j)].concat();
                let grad = |z: &[f64]| -> Result<Vec<f64>> {
                    let (xs, us) = z.split_at(n_x);
                    let fx = self.ocp.dynamics_jac_x(tj, xs, us, (k, j))?;
                    let fu = self.ocp.dynamics_jac_u(tj, xs, us, (k, j))?;
                    let sv = DVector::from_column_slice(&s);
                    let gx = fx.transpose() * &sv;
                    let gu = fu.transpose() * &sv;
                    Ok(gx.iter().chain(gu.iter()).copied().collect())
                };
                let local = fd_symmetric(&z, grad)?;
                let vars: Vec<usize> = (0..n_x)
                    .map(|i| self.state_var(b.state_points[j], i))
                    .chain((0..n_u).map(|l| self.control_var(k, j, l)))
                    .collect();
                for a in 0..n_z {
                    for c in 0..n_z {
                        t.push(vars[a], vars[c], local[(a, c)]);
                    }
                }
            }
        }
        // endpoint part: Φ + νᵀb over (x0, xf)
        let nu = DVector::from_column_slice(&lambda[self.boundary_offset..]);
        let e = self.endpoints(x);
        let z: Vec<f64> = [e.x0.as_slice(), e.xf.as_slice()].concat();
        let grad = |z: &[f64]| -> Result<Vec<f64>> {
            let ep = Endpoints {
                x0: z[..n_x].to_vec(),
                t0: e.t0,
                xf: z[n_x..].to_vec(),
                tf: e.tf,
            };
            let (g0, gf) = self.ocp.objective_grad(&ep)?;
            let mut g: Vec<f64> = g0.into_iter().chain(gf).collect();
            if self.ocp.n_b > 0 {
                let (j0, jf) = self.ocp.boundary_jac(&ep)?;
                let a = j0.transpose() * &nu;
                let c = jf.transpose() * &nu;
                for i in 0..n_x {
                    g[i] += a[i];
                    g[n_x + i] += c[i];
                }
            }
            Ok(g)
        };
        let local = fd_symmetric(&z, grad)?;
        let last = self.n_state_points - 1;
        let vars: Vec<usize> = (0..n_x)
            .map(|i| self.state_var(0, i))
            .chain((0..n_x).map(|i| self.state_var(last, i)))
            .collect();
        for a in 0..2 * n_x {
            for c in 0..2 * n_x {
                t.push(vars[a], vars[c], local[(a, c)]);
            }
        }
        Ok(t)
    }
}

/// Symmetrised one-sided finite-difference Jacobian of a gradient map.
fn fd_symmetric(z: &[f64], grad: impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<DMatrix<f64>> {
    let n = z.len();
    let g0 = grad(z)?;
    let mut h = DMatrix::zeros(n, n);
    let mut zp = z.to_vec();
    for c in 0..n {
        let step = HESSIAN_STEP * z[c].abs().max(1.0);
        zp[c] = z[c] + step;
        let g = grad(&zp)?;
        zp[c] = z[c];
        for r in 0..n {
            h[(r, c)] = (g[r] - g0[r]) / step;
        }
    }
    Ok(0.5 * (&h + h.transpose()))
}

/// `X_{N+1} = X_1 + (Δ/2) (∫_{-1}^{τ_extra} L_j) F_j` and the interpolant
/// through the N nodes and the extra point.
pub fn state_extension(
    x_nodes: &DMatrix<f64>,
    f_nodes: &DMatrix<f64>,
    ops: &CollocationOperators,
    delta: f64,
) -> Result<(Vec<f64>, Interpolant)> {
    let n = ops.n();
    if x_nodes.nrows() != n || f_nodes.nrows() != n || x_nodes.ncols() != f_nodes.ncols() {
        return Err(Error::InvalidInput("state extension needs N rows of states and dynamics".into()));
    }
    let row = ops.extra_row();
    let n_x = x_nodes.ncols();
    let extra: Vec<f64> = (0..n_x)
        .map(|i| x_nodes[(0, i)] + 0.5 * delta * row.dot(&f_nodes.column(i)))
        .collect();
    let mut support = ops.rule.nodes.clone();
    support.push(ops.tau_extra);
    let mut values = DMatrix::zeros(n + 1, n_x);
    values.rows_mut(0, n).copy_from(x_nodes);
    for i in 0..n_x {
        values[(n, i)] = extra[i];
    }
    let interp = Interpolant::from_unordered(&support, values)?;
    Ok((extra, interp))
}

/// Dense evaluation of a solved transcription.
///
/// The integral and derivative-like forms integrate the dynamics interpolant
/// from the left end of each interval; the second integral form interpolates
/// through the N + 1 support points; the classic form interpolates the states.
pub struct DenseTrajectory {
    intervals: Vec<DenseInterval>,
    boundaries: Vec<f64>,
    n_u: usize,
}

struct DenseInterval {
    lo: f64,
    h: f64,
    x1: Vec<f64>,
    f: DMatrix<f64>,
    half_delta: f64,
    ops: Arc<CollocationOperators>,
    state_interp: Option<Interpolant>,
    control_interp: Interpolant,
}

impl DenseTrajectory {
    pub fn new(problem: &NlpProblem, x: &[f64]) -> Result<Self> {
        let mut intervals = Vec::new();
        for (k, b) in problem.blocks.iter().enumerate() {
            let xs = problem.interval_states(x, k);
            let f = problem.interval_dynamics(x, k)?;
            let state_interp = match problem.form {
                Form::SecondIntegral => Some(state_extension(&xs, &f, &b.ops, b.delta)?.1),
                Form::Classic => Some(Interpolant::new(&b.ops.rule.nodes, xs.clone())?),
                _ => None,
            };
            let u = problem.interval_controls(x, k);
            intervals.push(DenseInterval {
                lo: problem.mesh.boundaries[k],
                h: problem.mesh.h(k),
                x1: xs.row(0).iter().copied().collect(),
                f,
                half_delta: 0.5 * b.delta,
                ops: b.ops.clone(),
                state_interp,
                control_interp: Interpolant::new(&b.ops.rule.nodes, u)?,
            });
        }
        Ok(Self {
            intervals,
            boundaries: problem.mesh.boundaries.clone(),
            n_u: problem.ocp.n_u,
        })
    }

    fn locate(&self, tau: f64) -> (usize, f64) {
        let k = self.boundaries[1..self.boundaries.len() - 1]
            .partition_point(|&b| b <= tau)
            .min(self.intervals.len() - 1);
        let iv = &self.intervals[k];
        let s = (2.0 * (tau - iv.lo) / iv.h - 1.0).clamp(-1.0, 1.0);
        (k, s)
    }

    /// State at `τ ∈ [-1, 1]`.
    pub fn state(&self, tau: f64) -> Vec<f64> {
        let (k, s) = self.locate(tau);
        let iv = &self.intervals[k];
        if let Some(interp) = &iv.state_interp {
            return interp.eval(s);
        }
        let row = iv.ops.rule.lagrange_integrals(s);
        (0..iv.x1.len())
            .map(|i| {
                let acc: f64 = row.iter().zip(iv.f.column(i).iter()).map(|(a, b)| a * b).sum();
                iv.x1[i] + iv.half_delta * acc
            })
            .collect()
    }

    pub fn control(&self, tau: f64) -> Vec<f64> {
        if self.n_u == 0 {
            return Vec::new();
        }
        let (k, s) = self.locate(tau);
        self.intervals[k].control_interp.eval(s)
    }
}

/// `n` equally spaced points on `[-1, 1]`, endpoints included.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    let mut g: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
    g[n - 1] = 1.0;
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve, SolverOptions};

    fn constant_rate(rate: f64, x0: f64) -> OcpDefinition {
        OcpDefinition::builder("rate", 1, 1)
            .horizon(-1.0, 1.0)
            .dynamics(move |_, _, _| vec![rate])
            .dynamics_jacobians(|_, _, _| DMatrix::zeros(1, 1), |_, _, _| DMatrix::zeros(1, 1))
            .objective(|e| e.xf[0])
            .objective_gradient(|_| (vec![0.0], vec![1.0]))
            .initial_state(vec![x0])
            .build()
            .unwrap()
    }

    fn solve_form(ocp: &OcpDefinition, n: usize, form: Form) -> (NlpProblem, Vec<f64>) {
        let p = transcribe(ocp, &Mesh::single(n).unwrap(), form, None).unwrap();
        let s = solve(&p, &p.initial_guess(), &SolverOptions::with_tol(1e-12)).unwrap();
        assert!(s.converged(), "{form}: {:?}", s.status);
        (p, s.primal)
    }

    #[test]
    fn zero_dynamics_every_form() {
        let ocp = constant_rate(0.0, 2.5);
        for form in Form::ALL {
            for n in [2, 3, 5] {
                let (p, x) = solve_form(&ocp, n, form);
                let xs = p.states(&x);
                assert!(xs.iter().all(|v| (v - 2.5).abs() < 1e-12), "{form} N={n}");
                if let Some(e) = p.extra_state(&x) {
                    assert!((e[0] - 2.5).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn unit_rate_integrates_exactly() {
        let ocp = constant_rate(1.0, 0.0);
        for form in Form::ALL {
            let (p, x) = solve_form(&ocp, 3, form);
            let xs = p.states(&x);
            for (i, v) in [0.0, 1.0, 2.0].iter().enumerate() {
                assert!((xs[(i, 0)] - v).abs() < 1e-12, "{form}");
            }
        }
    }

    #[test]
    fn derivative_like_e_reproduces_slope() {
        let ops = CollocationOperators::new(3).unwrap();
        let x = DVector::from_vec(vec![0.0, 1.0, 2.0]);
        // E X = [α | I] F with F ≡ 1
        let ex = &ops.e * x;
        assert!((ex[0] - 1.5).abs() < 1e-14 && ex[1].abs() < 1e-14);
    }

    #[test]
    fn counts_and_layout() {
        let ocp = constant_rate(1.0, 0.0);
        let p = transcribe_integral(&ocp, &Mesh::single(10).unwrap()).unwrap();
        assert_eq!(p.defect_rows(), 9);
        assert_eq!(p.n_cons(), 10);
        assert_eq!(p.n_vars(), 20);
        let m = Mesh::new(vec![-1.0, -0.2, 1.0], vec![3, 5]).unwrap();
        let p = transcribe_derivative_like(&ocp, &m).unwrap();
        assert_eq!(p.n_cons(), 2 + 4 + 1);
        assert_eq!(p.n_vars(), 7 + 8);
        assert_eq!(p.row_kind(3), RowKind::Defect { interval: 1, row: 1, component: 0 });
        assert_eq!(p.row_kind(6), RowKind::Boundary { index: 0 });
        let p = transcribe_second_integral(&ocp, &Mesh::single(4).unwrap(), Some(0.1)).unwrap();
        assert_eq!(p.n_cons(), 4 + 1);
        assert_eq!(p.n_vars(), 4 + 4 + 1);
    }

    #[test]
    fn single_interval_forms_reject_meshes() {
        let ocp = constant_rate(1.0, 0.0);
        let m = Mesh::uniform(2, 3).unwrap();
        assert!(transcribe(&ocp, &m, Form::SecondIntegral, None).is_err());
        assert!(transcribe(&ocp, &m, Form::Classic, None).is_err());
    }

    #[test]
    fn derivative_like_is_sparser() {
        let ocp = constant_rate(1.0, 0.0);
        for n in 3..8 {
            let m = Mesh::single(n).unwrap();
            let a = transcribe_integral(&ocp, &m).unwrap().f_block_nonzeros();
            let b = transcribe_derivative_like(&ocp, &m).unwrap().f_block_nonzeros();
            assert!(b < a, "N = {n}");
        }
    }

    #[test]
    fn extension_of_linear_rate() {
        // ẋ = τ through the control, x(-1) = 0 gives x = (τ² - 1)/2
        let ops = CollocationOperators::new(5).unwrap();
        let xs = DMatrix::from_fn(5, 1, |j, _| (ops.rule.nodes[j].powi(2) - 1.0) / 2.0);
        let fs = DMatrix::from_fn(5, 1, |j, _| ops.rule.nodes[j]);
        let (extra, interp) = state_extension(&xs, &fs, &ops, 2.0).unwrap();
        assert!((extra[0] - (ops.tau_extra.powi(2) - 1.0) / 2.0).abs() < 1e-14);
        for t in uniform_grid(100) {
            assert!((interp.eval(t)[0] - (t * t - 1.0) / 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn form_names_round_trip() {
        for f in Form::ALL {
            assert_eq!(f.name().parse::<Form>().unwrap(), f);
        }
        assert!("spectral".parse::<Form>().is_err());
    }
}
