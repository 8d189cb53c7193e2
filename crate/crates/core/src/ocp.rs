//! Optimal control problem definitions and meshes.
//!
//! A problem has fixed initial and final times, a Mayer objective
//! `Φ(x0, t0, xf, tf)`, dynamics `ẋ = f(t, x, u)` and boundary conditions
//! `b(x0, t0, xf, tf) = 0`. Callbacks are shared closures and must be
//! re-entrant: sweeps evaluate them from several threads at once.
//!
//! Boundary rows for fixed initial states are conventionally written as
//! `given - x0`, so that the multipliers of those rows are the initial-condition
//! multipliers `μ` under the Lagrangian `Φ + ⟨λ, c⟩`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub type DynamicsFn = Arc<dyn Fn(f64, &[f64], &[f64]) -> Vec<f64> + Send + Sync>;
pub type DynamicsJacFn = Arc<dyn Fn(f64, &[f64], &[f64]) -> DMatrix<f64> + Send + Sync>;
pub type ObjectiveFn = Arc<dyn Fn(&Endpoints) -> f64 + Send + Sync>;
/// Gradient of the objective as `(∂Φ/∂x0, ∂Φ/∂xf)`.
pub type ObjectiveGradFn = Arc<dyn Fn(&Endpoints) -> (Vec<f64>, Vec<f64>) + Send + Sync>;
pub type BoundaryFn = Arc<dyn Fn(&Endpoints) -> Vec<f64> + Send + Sync>;
/// Boundary Jacobian as `(∂b/∂x0, ∂b/∂xf)`, each `n_b × n_x`.
pub type BoundaryJacFn = Arc<dyn Fn(&Endpoints) -> (DMatrix<f64>, DMatrix<f64>) + Send + Sync>;
/// Initial guess `(x(t), u(t))`.
pub type GuessFn = Arc<dyn Fn(f64) -> (Vec<f64>, Vec<f64>) + Send + Sync>;

/// Relative tolerance for supplied Jacobians against central differences.
pub const JACOBIAN_CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Endpoints {
    pub x0: Vec<f64>,
    pub t0: f64,
    pub xf: Vec<f64>,
    pub tf: f64,
}

#[derive(Clone)]
pub struct OcpDefinition {
    pub name: String,
    pub n_x: usize,
    pub n_u: usize,
    pub n_b: usize,
    pub t0: f64,
    pub tf: f64,
    dynamics: DynamicsFn,
    jac_x: Option<DynamicsJacFn>,
    jac_u: Option<DynamicsJacFn>,
    objective: ObjectiveFn,
    objective_grad: Option<ObjectiveGradFn>,
    boundary: BoundaryFn,
    boundary_jac: Option<BoundaryJacFn>,
    guess: Option<GuessFn>,
    boundary_guess: Option<(Vec<f64>, Vec<f64>)>,
    /// Period of each control that only enters through periodic functions.
    pub control_periods: Vec<Option<f64>>,
}

impl std::fmt::Debug for OcpDefinition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OcpDefinition")
            .field("name", &self.name)
            .field("n_x", &self.n_x)
            .field("n_u", &self.n_u)
            .field("n_b", &self.n_b)
            .field("t0", &self.t0)
            .field("tf", &self.tf)
            .field("analytic_jacobians", &(self.jac_x.is_some() && self.jac_u.is_some()))
            .finish()
    }
}

fn fd_step(v: f64) -> f64 {
    f64::EPSILON.cbrt() * v.abs().max(1.0)
}

/// Central-difference Jacobian of `g` at `z`.
pub fn central_jacobian(z: &[f64], m: usize, g: impl Fn(&[f64]) -> Vec<f64>) -> DMatrix<f64> {
    let mut jac = DMatrix::zeros(m, z.len());
    let mut zp = z.to_vec();
    for k in 0..z.len() {
        let h = fd_step(z[k]);
        zp[k] = z[k] + h;
        let fp = g(&zp);
        zp[k] = z[k] - h;
        let fm = g(&zp);
        zp[k] = z[k];
        for i in 0..m {
            jac[(i, k)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

impl OcpDefinition {
    pub fn builder(name: impl Into<String>, n_x: usize, n_u: usize) -> OcpBuilder {
        OcpBuilder::new(name, n_x, n_u)
    }

    pub fn has_analytic_jacobians(&self) -> bool {
        self.jac_x.is_some() && self.jac_u.is_some()
    }

    /// Map `τ ∈ [-1, 1]` to time.
    pub fn time_of(&self, tau: f64) -> f64 {
        0.5 * (self.tf - self.t0) * tau + 0.5 * (self.tf + self.t0)
    }

    pub fn tau_of(&self, t: f64) -> f64 {
        (2.0 * t - self.tf - self.t0) / (self.tf - self.t0)
    }

    fn check_len(&self, got: usize, expected: usize, callback: &'static str, at: (usize, usize)) -> Result<()> {
        if got != expected {
            return Err(Error::CallbackDimension {
                callback,
                interval: at.0,
                node: at.1,
                expected,
                got,
            });
        }
        Ok(())
    }

    /// Dynamics at one node; `at = (interval, node)` is used in error reports.
    pub fn dynamics(&self, t: f64, x: &[f64], u: &[f64], at: (usize, usize)) -> Result<Vec<f64>> {
        let f = (self.dynamics)(t, x, u);
        self.check_len(f.len(), self.n_x, "dynamics", at)?;
        Ok(f)
    }

    pub fn dynamics_jac_x(&self, t: f64, x: &[f64], u: &[f64], at: (usize, usize)) -> Result<DMatrix<f64>> {
        let j = match &self.jac_x {
            Some(jf) => jf(t, x, u),
            None => central_jacobian(x, self.n_x, |xp| (self.dynamics)(t, xp, u)),
        };
        self.check_shape(&j, self.n_x, self.n_x, "dyn_jac_x", at)?;
        Ok(j)
    }

    pub fn dynamics_jac_u(&self, t: f64, x: &[f64], u: &[f64], at: (usize, usize)) -> Result<DMatrix<f64>> {
        let j = match &self.jac_u {
            Some(jf) => jf(t, x, u),
            None => central_jacobian(u, self.n_x, |up| (self.dynamics)(t, x, up)),
        };
        self.check_shape(&j, self.n_x, self.n_u, "dyn_jac_u", at)?;
        Ok(j)
    }

    fn check_shape(
        &self,
        j: &DMatrix<f64>,
        rows: usize,
        cols: usize,
        callback: &'static str,
        at: (usize, usize),
    ) -> Result<()> {
        self.check_len(j.nrows() * j.ncols(), rows * cols, callback, at)?;
        self.check_len(j.nrows(), rows, callback, at)
    }

    pub fn objective(&self, e: &Endpoints) -> f64 {
        (self.objective)(e)
    }

    pub fn objective_grad(&self, e: &Endpoints) -> Result<(Vec<f64>, Vec<f64>)> {
        let (g0, gf) = match &self.objective_grad {
            Some(g) => g(e),
            None => {
                let z = [e.x0.as_slice(), e.xf.as_slice()].concat();
                let j = central_jacobian(&z, 1, |zp| vec![(self.objective)(&self.split(zp, e))]);
                let row: Vec<f64> = j.row(0).iter().copied().collect();
                (row[..self.n_x].to_vec(), row[self.n_x..].to_vec())
            }
        };
        for g in [&g0, &gf] {
            if g.len() != self.n_x {
                return Err(Error::EndpointDimension {
                    callback: "objective_grad",
                    expected: self.n_x,
                    got: g.len(),
                });
            }
        }
        Ok((g0, gf))
    }

    pub fn boundary(&self, e: &Endpoints) -> Result<Vec<f64>> {
        let b = (self.boundary)(e);
        if b.len() != self.n_b {
            return Err(Error::EndpointDimension {
                callback: "boundary",
                expected: self.n_b,
                got: b.len(),
            });
        }
        Ok(b)
    }

    pub fn boundary_jac(&self, e: &Endpoints) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let (j0, jf) = match &self.boundary_jac {
            Some(g) => g(e),
            None => {
                let z = [e.x0.as_slice(), e.xf.as_slice()].concat();
                let j = central_jacobian(&z, self.n_b, |zp| (self.boundary)(&self.split(zp, e)));
                (
                    j.columns(0, self.n_x).into_owned(),
                    j.columns(self.n_x, self.n_x).into_owned(),
                )
            }
        };
        for m in [&j0, &jf] {
            if m.nrows() != self.n_b || m.ncols() != self.n_x {
                return Err(Error::EndpointDimension {
                    callback: "boundary_jac",
                    expected: self.n_b * self.n_x,
                    got: m.nrows() * m.ncols(),
                });
            }
        }
        Ok((j0, jf))
    }

    fn split(&self, z: &[f64], e: &Endpoints) -> Endpoints {
        Endpoints {
            x0: z[..self.n_x].to_vec(),
            t0: e.t0,
            xf: z[self.n_x..].to_vec(),
            tf: e.tf,
        }
    }

    /// `a - b` for control `l`, reduced to `[-P/2, P/2]` for periodic controls.
    pub fn control_difference(&self, l: usize, a: f64, b: f64) -> f64 {
        let d = a - b;
        match self.control_periods.get(l).copied().flatten() {
            Some(p) => d - p * (d / p).round(),
            None => d,
        }
    }

    /// Initial guess at time `t`. Without a guess callback, states interpolate
    /// linearly between the endpoint guesses (zeros if none) and controls are zero.
    pub fn guess(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        if let Some(g) = &self.guess {
            return g(t);
        }
        let s = (t - self.t0) / (self.tf - self.t0);
        let x = match &self.boundary_guess {
            Some((a, b)) => a.iter().zip(b).map(|(a, b)| a + s * (b - a)).collect(),
            None => vec![0.0; self.n_x],
        };
        (x, vec![0.0; self.n_u])
    }
}

pub struct OcpBuilder {
    name: String,
    n_x: usize,
    n_u: usize,
    n_b: usize,
    t0: f64,
    tf: f64,
    dynamics: Option<DynamicsFn>,
    jac_x: Option<DynamicsJacFn>,
    jac_u: Option<DynamicsJacFn>,
    objective: Option<ObjectiveFn>,
    objective_grad: Option<ObjectiveGradFn>,
    boundary: Option<BoundaryFn>,
    boundary_jac: Option<BoundaryJacFn>,
    guess: Option<GuessFn>,
    boundary_guess: Option<(Vec<f64>, Vec<f64>)>,
    control_periods: Vec<Option<f64>>,
    probes: usize,
}

impl OcpBuilder {
    pub fn new(name: impl Into<String>, n_x: usize, n_u: usize) -> Self {
        Self {
            name: name.into(),
            n_x,
            n_u,
            n_b: 0,
            t0: 0.0,
            tf: 1.0,
            dynamics: None,
            jac_x: None,
            jac_u: None,
            objective: None,
            objective_grad: None,
            boundary: None,
            boundary_jac: None,
            guess: None,
            boundary_guess: None,
            control_periods: vec![None; n_u],
            probes: 5,
        }
    }

    pub fn horizon(mut self, t0: f64, tf: f64) -> Self {
        self.t0 = t0;
        self.tf = tf;
        self
    }

    pub fn dynamics(mut self, f: impl Fn(f64, &[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.dynamics = Some(Arc::new(f));
        self
    }

    pub fn dynamics_jacobians(
        mut self,
        fx: impl Fn(f64, &[f64], &[f64]) -> DMatrix<f64> + Send + Sync + 'static,
        fu: impl Fn(f64, &[f64], &[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.jac_x = Some(Arc::new(fx));
        self.jac_u = Some(Arc::new(fu));
        self
    }

    pub fn objective(mut self, phi: impl Fn(&Endpoints) -> f64 + Send + Sync + 'static) -> Self {
        self.objective = Some(Arc::new(phi));
        self
    }

    pub fn objective_gradient(
        mut self,
        g: impl Fn(&Endpoints) -> (Vec<f64>, Vec<f64>) + Send + Sync + 'static,
    ) -> Self {
        self.objective_grad = Some(Arc::new(g));
        self
    }

    pub fn boundary(mut self, n_b: usize, b: impl Fn(&Endpoints) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.n_b = n_b;
        self.boundary = Some(Arc::new(b));
        self
    }

    pub fn boundary_jacobian(
        mut self,
        j: impl Fn(&Endpoints) -> (DMatrix<f64>, DMatrix<f64>) + Send + Sync + 'static,
    ) -> Self {
        self.boundary_jac = Some(Arc::new(j));
        self
    }

    /// Fixed initial state, as rows `x0_given - x0`.
    pub fn initial_state(self, x0: Vec<f64>) -> Self {
        let n_x = self.n_x;
        let given = x0.clone();
        let xf_guess = self.boundary_guess.as_ref().map(|g| g.1.clone()).unwrap_or_else(|| x0.clone());
        let mut b = self.boundary(n_x, move |e| given.iter().zip(&e.x0).map(|(g, x)| g - x).collect());
        b.boundary_jac = Some(Arc::new(move |_| (-DMatrix::identity(n_x, n_x), DMatrix::zeros(n_x, n_x))));
        b.boundary_guess = Some((x0, xf_guess));
        b
    }

    pub fn guess(mut self, g: impl Fn(f64) -> (Vec<f64>, Vec<f64>) + Send + Sync + 'static) -> Self {
        self.guess = Some(Arc::new(g));
        self
    }

    /// Endpoint state guesses used by the default linear guess.
    pub fn endpoint_guess(mut self, x0: Vec<f64>, xf: Vec<f64>) -> Self {
        self.boundary_guess = Some((x0, xf));
        self
    }

    /// Marks control `l` as an angle-like variable of the given period, so
    /// solutions differing by whole periods compare equal.
    pub fn periodic_control(mut self, l: usize, period: f64) -> Self {
        if l < self.n_u {
            self.control_periods[l] = Some(period);
        }
        self
    }

    /// Number of probe points used to validate supplied Jacobians.
    pub fn jacobian_probes(mut self, probes: usize) -> Self {
        self.probes = probes;
        self
    }

    pub fn build(self) -> Result<OcpDefinition> {
        if !(self.tf > self.t0) || !self.t0.is_finite() || !self.tf.is_finite() {
            return Err(Error::InvalidInput(format!(
                "final time {} must exceed initial time {}",
                self.tf, self.t0
            )));
        }
        if self.n_x == 0 {
            return Err(Error::InvalidInput("state dimension must be positive".into()));
        }
        if self.jac_x.is_some() != self.jac_u.is_some() {
            return Err(Error::InvalidInput("supply both dynamics Jacobians or neither".into()));
        }
        let dynamics = self
            .dynamics
            .ok_or_else(|| Error::InvalidInput("dynamics callback is required".into()))?;
        let objective = self
            .objective
            .ok_or_else(|| Error::InvalidInput("objective callback is required".into()))?;
        let boundary = self.boundary.unwrap_or_else(|| Arc::new(|_| Vec::new()));
        let ocp = OcpDefinition {
            name: self.name,
            n_x: self.n_x,
            n_u: self.n_u,
            n_b: self.n_b,
            t0: self.t0,
            tf: self.tf,
            dynamics,
            jac_x: self.jac_x,
            jac_u: self.jac_u,
            objective,
            objective_grad: self.objective_grad,
            boundary,
            boundary_jac: self.boundary_jac,
            guess: self.guess,
            boundary_guess: self.boundary_guess,
            control_periods: self.control_periods,
        };
        ocp.validate(self.probes)?;
        Ok(ocp)
    }
}

fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = b.amax().max(1.0);
    (a - b).amax() / scale
}

impl OcpDefinition {
    /// Probe points along the guess, perturbed deterministically off the guess so
    /// that zero controls do not hide control-dependent terms.
    fn probe_points(&self, count: usize) -> Vec<(f64, Vec<f64>, Vec<f64>)> {
        (0..count)
            .map(|k| {
                let s = (k as f64 + 0.5) / count as f64;
                let t = self.t0 + s * (self.tf - self.t0);
                let (mut x, mut u) = self.guess(t);
                for (i, v) in x.iter_mut().enumerate() {
                    *v += 0.01 * (1.7 * (k + i) as f64 + 0.3).sin();
                }
                for (i, v) in u.iter_mut().enumerate() {
                    *v += 0.1 * (2.3 * (k + i) as f64 + 0.9).cos();
                }
                (t, x, u)
            })
            .collect()
    }

    fn validate(&self, probes: usize) -> Result<()> {
        let at = (0, 0);
        for (node, (t, x, u)) in self.probe_points(probes.max(1)).into_iter().enumerate() {
            if x.len() != self.n_x || u.len() != self.n_u {
                return Err(Error::CallbackDimension {
                    callback: "guess",
                    interval: 0,
                    node,
                    expected: self.n_x + self.n_u,
                    got: x.len() + u.len(),
                });
            }
            self.dynamics(t, &x, &u, (0, node))?;
            if let (Some(jx), Some(ju)) = (&self.jac_x, &self.jac_u) {
                let ax = jx(t, &x, &u);
                let au = ju(t, &x, &u);
                self.check_shape(&ax, self.n_x, self.n_x, "dyn_jac_x", at)?;
                self.check_shape(&au, self.n_x, self.n_u, "dyn_jac_u", at)?;
                let nx = central_jacobian(&x, self.n_x, |xp| (self.dynamics)(t, xp, &u));
                let nu = central_jacobian(&u, self.n_x, |up| (self.dynamics)(t, &x, up));
                let e = rel_err(&ax, &nx);
                if e > JACOBIAN_CHECK_TOL {
                    return Err(Error::JacobianMismatch { which: "dyn_jac_x", rel_err: e });
                }
                let e = rel_err(&au, &nu);
                if e > JACOBIAN_CHECK_TOL {
                    return Err(Error::JacobianMismatch { which: "dyn_jac_u", rel_err: e });
                }
            }
        }
        let (x0, _) = self.guess(self.t0);
        let (xf, _) = self.guess(self.tf);
        let e = Endpoints {
            x0,
            t0: self.t0,
            xf,
            tf: self.tf,
        };
        self.boundary(&e)?;
        let (g0, gf) = self.objective_grad(&e)?;
        if self.objective_grad.is_some() {
            let z = [e.x0.as_slice(), e.xf.as_slice()].concat();
            let num = central_jacobian(&z, 1, |zp| vec![(self.objective)(&self.split(zp, &e))]);
            let ana = DMatrix::from_row_slice(1, z.len(), &[g0, gf].concat());
            let err = rel_err(&ana, &num);
            if err > JACOBIAN_CHECK_TOL {
                return Err(Error::JacobianMismatch { which: "objective_grad", rel_err: err });
            }
        }
        if self.boundary_jac.is_some() && self.n_b > 0 {
            let (j0, jf) = self.boundary_jac(&e)?;
            let z = [e.x0.as_slice(), e.xf.as_slice()].concat();
            let num = central_jacobian(&z, self.n_b, |zp| (self.boundary)(&self.split(zp, &e)));
            let mut ana = DMatrix::zeros(self.n_b, 2 * self.n_x);
            ana.columns_mut(0, self.n_x).copy_from(&j0);
            ana.columns_mut(self.n_x, self.n_x).copy_from(&jf);
            let err = rel_err(&ana, &num);
            if err > JACOBIAN_CHECK_TOL {
                return Err(Error::JacobianMismatch { which: "boundary_jac", rel_err: err });
            }
        }
        Ok(())
    }

    /// Largest relative disagreement of the dynamics Jacobians with central
    /// differences over `probes` points. Uses finite differences on both sides
    /// when no Jacobians were supplied.
    pub fn jacobian_check(&self, probes: usize) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (node, (t, x, u)) in self.probe_points(probes.max(1)).into_iter().enumerate() {
            let ax = self.dynamics_jac_x(t, &x, &u, (0, node))?;
            let au = self.dynamics_jac_u(t, &x, &u, (0, node))?;
            let nx = central_jacobian(&x, self.n_x, |xp| (self.dynamics)(t, xp, &u));
            let nu = central_jacobian(&u, self.n_x, |up| (self.dynamics)(t, &x, up));
            worst = worst.max(rel_err(&ax, &nx)).max(rel_err(&au, &nu));
        }
        Ok(worst)
    }
}

/// Mesh on `τ ∈ [-1, 1]`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Mesh {
    pub boundaries: Vec<f64>,
    pub points_per_interval: Vec<usize>,
}

impl Mesh {
    pub fn new(boundaries: Vec<f64>, points_per_interval: Vec<usize>) -> Result<Self> {
        if boundaries.len() < 2 {
            return Err(Error::InvalidInput("mesh needs at least two boundaries".into()));
        }
        if boundaries[0] != -1.0 || *boundaries.last().unwrap() != 1.0 {
            return Err(Error::InvalidInput("mesh must start at -1 and end at +1".into()));
        }
        if boundaries.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("mesh boundaries must be strictly increasing".into()));
        }
        if points_per_interval.len() + 1 != boundaries.len() {
            return Err(Error::InvalidInput(format!(
                "{} intervals but {} point counts",
                boundaries.len() - 1,
                points_per_interval.len()
            )));
        }
        if let Some(&n) = points_per_interval.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidInput(format!("interval point count {n} is below 2")));
        }
        Ok(Self {
            boundaries,
            points_per_interval,
        })
    }

    pub fn uniform(intervals: usize, n_points: usize) -> Result<Self> {
        if intervals == 0 {
            return Err(Error::InvalidInput("mesh needs at least one interval".into()));
        }
        let mut b: Vec<f64> = (0..=intervals)
            .map(|k| -1.0 + 2.0 * k as f64 / intervals as f64)
            .collect();
        b[intervals] = 1.0;
        Self::new(b, vec![n_points; intervals])
    }

    pub fn single(n_points: usize) -> Result<Self> {
        Self::uniform(1, n_points)
    }

    pub fn intervals(&self) -> usize {
        self.points_per_interval.len()
    }

    /// `h_k = T_k - T_{k-1}` (zero-based `k`).
    pub fn h(&self, k: usize) -> f64 {
        self.boundaries[k + 1] - self.boundaries[k]
    }

    /// Map a reference node `s ∈ [-1, 1]` into interval `k`.
    pub fn tau(&self, k: usize, s: f64) -> f64 {
        if s == 1.0 {
            return self.boundaries[k + 1];
        }
        if s == -1.0 {
            return self.boundaries[k];
        }
        self.boundaries[k] + 0.5 * self.h(k) * (s + 1.0)
    }

    /// Global index of the first state point of interval `k`.
    pub fn first_point(&self, k: usize) -> usize {
        self.points_per_interval[..k].iter().map(|n| n - 1).sum()
    }

    /// Number of distinct state points (interior mesh points shared).
    pub fn state_points(&self) -> usize {
        1 + self.points_per_interval.iter().map(|n| n - 1).sum::<usize>()
    }

    pub fn total_nodes(&self) -> usize {
        self.points_per_interval.iter().sum()
    }

    pub fn max_h(&self) -> f64 {
        (0..self.intervals()).map(|k| self.h(k)).fold(0.0, f64::max)
    }

    pub fn is_single(&self) -> bool {
        self.intervals() == 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple() -> OcpBuilder {
        OcpDefinition::builder("lin", 1, 1)
            .horizon(0.0, 1.0)
            .dynamics(|_, x, u| vec![-x[0] + u[0] * u[0]])
            .objective(|e| e.xf[0])
            .initial_state(vec![1.0])
    }

    #[test]
    fn rejects_reversed_time() {
        assert!(simple().horizon(1.0, 0.0).build().is_err());
    }

    #[test]
    fn rejects_wrong_jacobian() {
        let r = simple()
            .dynamics_jacobians(
                |_, _, _| DMatrix::from_element(1, 1, -1.0),
                |_, _, u| DMatrix::from_element(1, 1, u[0]),
            )
            .build();
        assert!(matches!(r, Err(Error::JacobianMismatch { which: "dyn_jac_u", .. })));
    }

    #[test]
    fn accepts_correct_jacobian() {
        let ocp = simple()
            .dynamics_jacobians(
                |_, _, _| DMatrix::from_element(1, 1, -1.0),
                |_, _, u| DMatrix::from_element(1, 1, 2.0 * u[0]),
            )
            .build()
            .unwrap();
        assert!(ocp.jacobian_check(7).unwrap() < 1e-8);
    }

    #[test]
    fn reports_dimension_errors_with_location() {
        let ocp = simple().build().unwrap();
        let bad = OcpDefinition { dynamics: Arc::new(|_, _, _| vec![0.0, 0.0]), ..ocp };
        match bad.dynamics(0.0, &[1.0], &[0.0], (3, 2)) {
            Err(Error::CallbackDimension { interval: 3, node: 2, expected: 1, got: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn default_guess_is_linear() {
        let ocp = simple().endpoint_guess(vec![1.0], vec![3.0]).build().unwrap();
        let (x, u) = ocp.guess(0.5);
        assert_eq!(x, vec![2.0]);
        assert_eq!(u, vec![0.0]);
    }

    #[test]
    fn fd_objective_gradient() {
        let ocp = simple().build().unwrap();
        let e = Endpoints { x0: vec![0.3], t0: 0.0, xf: vec![0.7], tf: 1.0 };
        let (g0, gf) = ocp.objective_grad(&e).unwrap();
        assert!(g0[0].abs() < 1e-9 && (gf[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mesh_validation() {
        assert!(Mesh::new(vec![-1.0, 0.0, 1.0], vec![3, 3]).is_ok());
        assert!(Mesh::new(vec![-1.0, 0.5, 0.5, 1.0], vec![3, 3, 3]).is_err());
        assert!(Mesh::new(vec![-0.9, 1.0], vec![3]).is_err());
        assert!(Mesh::new(vec![-1.0, 1.0], vec![1]).is_err());
        let m = Mesh::uniform(4, 3).unwrap();
        assert_eq!(m.state_points(), 9);
        assert_eq!(m.first_point(2), 4);
        assert_eq!(m.tau(3, 1.0), 1.0);
        assert!((m.h(1) - 0.5).abs() < 1e-15);
    }
}
