//! The two benchmark problems.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::Result;
use crate::ocp::OcpDefinition;

/// `a(t) = 1 + 3 e^{5t/2}`.
fn a_of(t: f64) -> f64 {
    1.0 + 3.0 * (2.5 * t).exp()
}

/// Closed-form optimal solution of the first benchmark.
#[derive(Debug, Clone, Copy, Default)]
pub struct Example1Solution;

impl Example1Solution {
    pub fn state(&self, t: f64) -> f64 {
        4.0 / a_of(t)
    }

    pub fn control(&self, t: f64) -> f64 {
        0.5 * self.state(t)
    }

    pub fn costate(&self, t: f64) -> f64 {
        let denom = (-5.0f64).exp() + 6.0 + 9.0 * 5.0f64.exp();
        -(2.0 * a_of(t).ln() - 2.5 * t).exp() / denom
    }

    /// Optimal objective `-y*(2)`.
    pub fn objective(&self) -> f64 {
        -self.state(2.0)
    }
}

/// Minimise `-y(2)` subject to `ẏ = (5/2)(-y + yu - u²)`, `y(0) = 1`.
///
/// The exact solution is used as the initial guess.
pub fn example1() -> Result<OcpDefinition> {
    let exact = Example1Solution;
    OcpDefinition::builder("ex1", 1, 1)
        .horizon(0.0, 2.0)
        .dynamics(|_, x, u| vec![2.5 * (-x[0] + x[0] * u[0] - u[0] * u[0])])
        .dynamics_jacobians(
            |_, _, u| DMatrix::from_element(1, 1, 2.5 * (u[0] - 1.0)),
            |_, x, u| DMatrix::from_element(1, 1, 2.5 * (x[0] - 2.0 * u[0])),
        )
        .objective(|e| -e.xf[0])
        .objective_gradient(|_| (vec![0.0], vec![-1.0]))
        .initial_state(vec![1.0])
        .guess(move |t| (vec![exact.state(t)], vec![exact.control(t)]))
        .build()
}

/// Constants of the orbit-raising problem.
#[derive(Debug, Clone, Copy)]
pub struct OrbitConstants {
    pub tf: f64,
    pub thrust: f64,
    pub m0: f64,
    pub mdot: f64,
}

impl Default for OrbitConstants {
    fn default() -> Self {
        Self {
            tf: 3.32,
            thrust: 0.1405,
            m0: 1.0,
            mdot: 0.0749,
        }
    }
}

impl OrbitConstants {
    /// Thrust acceleration `T / (m0 - |ṁ| t)`.
    pub fn accel(&self, t: f64) -> f64 {
        self.thrust / (self.m0 - self.mdot * t)
    }
}

/// Control used by the propagated initial guess.
pub const EXAMPLE2_GUESS_CONTROL: f64 = 0.001;
const GUESS_STEPS: usize = 2000;

pub fn orbit_dynamics(c: &OrbitConstants, t: f64, x: &[f64], u: &[f64]) -> Vec<f64> {
    let (r, v_r, v_t) = (x[0], x[2], x[3]);
    let a = c.accel(t);
    vec![
        v_r,
        v_t / r,
        v_t * v_t / r - 1.0 / (r * r) + a * u[0].sin(),
        -v_r * v_t / r + a * u[0].cos(),
    ]
}

fn orbit_jac_x(x: &[f64]) -> DMatrix<f64> {
    let (r, v_r, v_t) = (x[0], x[2], x[3]);
    let r2 = r * r;
    DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0, 0.0, 1.0, 0.0,
            -v_t / r2, 0.0, 0.0, 1.0 / r,
            -v_t * v_t / r2 + 2.0 / (r2 * r), 0.0, 0.0, 2.0 * v_t / r,
            v_r * v_t / r2, 0.0, -v_t / r, -v_r / r,
        ],
    )
}

fn orbit_jac_u(c: &OrbitConstants, t: f64, u: &[f64]) -> DMatrix<f64> {
    let a = c.accel(t);
    DMatrix::from_column_slice(4, 1, &[0.0, 0.0, a * u[0].cos(), -a * u[0].sin()])
}

/// Fixed-step RK4 samples of the dynamics under a constant control, with
/// cubic Hermite interpolation between samples.
#[derive(Debug, Clone)]
pub struct Propagation {
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    rates: Vec<Vec<f64>>,
}

impl Propagation {
    pub fn new(
        f: impl Fn(f64, &[f64]) -> Vec<f64>,
        x0: &[f64],
        t0: f64,
        tf: f64,
        steps: usize,
    ) -> Self {
        let h = (tf - t0) / steps as f64;
        let mut times = Vec::with_capacity(steps + 1);
        let mut states = Vec::with_capacity(steps + 1);
        let mut rates = Vec::with_capacity(steps + 1);
        let mut x = x0.to_vec();
        for s in 0..=steps {
            let t = if s == steps { tf } else { t0 + s as f64 * h };
            times.push(t);
            rates.push(f(t, &x));
            states.push(x.clone());
            if s == steps {
                break;
            }
            let axpy = |a: &[f64], b: &[f64], w: f64| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p + w * q).collect() };
            let k1 = rates[s].clone();
            let k2 = f(t + 0.5 * h, &axpy(&x, &k1, 0.5 * h));
            let k3 = f(t + 0.5 * h, &axpy(&x, &k2, 0.5 * h));
            let k4 = f(t + h, &axpy(&x, &k3, h));
            for i in 0..x.len() {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        Self { times, states, rates }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let last = self.times.len() - 1;
        let k = self.times[1..last].partition_point(|&s| s <= t);
        let (ta, tb) = (self.times[k], self.times[k + 1]);
        let h = tb - ta;
        let s = ((t - ta) / h).clamp(0.0, 1.0);
        let (h00, h10, h01, h11) = (
            2.0 * s.powi(3) - 3.0 * s * s + 1.0,
            s.powi(3) - 2.0 * s * s + s,
            -2.0 * s.powi(3) + 3.0 * s * s,
            s.powi(3) - s * s,
        );
        (0..self.states[k].len())
            .map(|i| {
                h00 * self.states[k][i]
                    + h10 * h * self.rates[k][i]
                    + h01 * self.states[k + 1][i]
                    + h11 * h * self.rates[k + 1][i]
            })
            .collect()
    }
}

/// Orbit raising: maximise the final radius with thrust direction `ε`.
///
/// States `(r, θ, u, v)`, control `ε`. Boundary rows are
/// `(1 - r0, -θ0, -u0, 1 - v0, u_f, v_f - √(1/r_f))`.
pub fn example2() -> Result<OcpDefinition> {
    example2_with(OrbitConstants::default())
}

pub fn example2_with(c: OrbitConstants) -> Result<OcpDefinition> {
    let x0 = vec![1.0, 0.0, 0.0, 1.0];
    let prop = Arc::new(Propagation::new(
        |t, x| orbit_dynamics(&c, t, x, &[EXAMPLE2_GUESS_CONTROL]),
        &x0,
        0.0,
        c.tf,
        GUESS_STEPS,
    ));
    let given = x0.clone();
    OcpDefinition::builder("ex2", 4, 1)
        .horizon(0.0, c.tf)
        .dynamics(move |t, x, u| orbit_dynamics(&c, t, x, u))
        .dynamics_jacobians(|_, x, _| orbit_jac_x(x), move |t, _, u| orbit_jac_u(&c, t, u))
        .objective(|e| -e.xf[0])
        .objective_gradient(|_| (vec![0.0; 4], vec![-1.0, 0.0, 0.0, 0.0]))
        .boundary(6, move |e| {
            vec![
                given[0] - e.x0[0],
                given[1] - e.x0[1],
                given[2] - e.x0[2],
                given[3] - e.x0[3],
                e.xf[2],
                e.xf[3] - (1.0 / e.xf[0]).sqrt(),
            ]
        })
        .boundary_jacobian(|e| {
            let mut j0 = DMatrix::zeros(6, 4);
            for i in 0..4 {
                j0[(i, i)] = -1.0;
            }
            let mut jf = DMatrix::zeros(6, 4);
            jf[(4, 2)] = 1.0;
            jf[(5, 0)] = 0.5 * e.xf[0].powf(-1.5);
            jf[(5, 3)] = 1.0;
            (j0, jf)
        })
        .guess(move |t| (prop.eval(t), vec![EXAMPLE2_GUESS_CONTROL]))
        .periodic_control(0, std::f64::consts::TAU)
        .build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ocp::Endpoints;

    #[test]
    fn example1_closed_form() {
        let s = Example1Solution;
        assert!((s.state(0.0) - 1.0).abs() < 1e-15);
        assert!((s.control(0.0) - 0.5).abs() < 1e-15);
        assert!((s.costate(2.0) + 1.0).abs() < 1e-14);
        let denom = (-5.0f64).exp() + 6.0 + 9.0 * 5.0f64.exp();
        assert!((s.costate(0.0) + 16.0 / denom).abs() < 1e-16);
    }

    #[test]
    fn example1_exact_solution_satisfies_dynamics() {
        let s = Example1Solution;
        let ocp = example1().unwrap();
        for k in 0..=20 {
            let t = 0.1 * k as f64;
            let h = 1e-5;
            let dy = (s.state(t + h) - s.state(t - h)) / (2.0 * h);
            let f = ocp.dynamics(t, &[s.state(t)], &[s.control(t)], (0, 0)).unwrap();
            assert!((dy - f[0]).abs() < 1e-8);
            // costate dynamics λ̇ = -λ f_y
            let dl = (s.costate(t + h) - s.costate(t - h)) / (2.0 * h);
            assert!((dl + s.costate(t) * 2.5 * (s.control(t) - 1.0)).abs() < 1e-8);
        }
    }

    #[test]
    fn example2_boundary_and_constants() {
        let ocp = example2().unwrap();
        let c = OrbitConstants::default();
        assert_eq!(c.accel(0.0), 0.1405);
        assert!((c.accel(3.32) - 0.1405 / (1.0 - 0.0749 * 3.32)).abs() < 1e-16);
        let e = Endpoints { x0: vec![1.0, 0.0, 0.0, 1.0], t0: 0.0, xf: vec![1.0, 2.0, 0.0, 1.0], tf: 3.32 };
        let b = ocp.boundary(&e).unwrap();
        assert!(b.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn analytic_jacobians_match_differences() {
        assert!(example1().unwrap().jacobian_check(25).unwrap() <= 1e-6);
        assert!(example2().unwrap().jacobian_check(25).unwrap() <= 1e-6);
    }

    #[test]
    fn propagation_of_linear_system() {
        let p = Propagation::new(|_, x| vec![x[0]], &[1.0], 0.0, 1.0, 200);
        for k in 0..=10 {
            let t = 0.1 * k as f64;
            assert!((p.eval(t)[0] - t.exp()).abs() < 1e-9);
        }
    }
}
