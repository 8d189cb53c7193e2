//! Costate estimates from NLP multipliers, adjoint residuals, the mesh-point
//! costate recursion and the classic smoothing filter.
//!
//! Multipliers are first rescaled to the canonical rows of each form (see
//! [`NlpProblem::interval_multipliers`]). With a general boundary function the
//! initial multiplier is `μ = -(∂Φ/∂x0 + (∂b/∂x0)ᵀν)` and the terminal
//! gradient is `∂Φ/∂xf + (∂b/∂xf)ᵀν`; for a fixed initial state written as
//! `x0_given - x0` and no terminal constraints these reduce to `ν` and `∇Φ`.

use nalgebra::{DMatrix, DVector};

use crate::basis::QuadratureRule;
use crate::classic::classic_costate;
use crate::error::{Error, Result};
use crate::solver::NlpSolution;
use crate::transcription::{Form, NlpProblem};

/// `Λ = W⁻¹ Ãᵀ M`.
pub fn costate_from_integral(m: &DMatrix<f64>, rule: &QuadratureRule, a_tilde: &DMatrix<f64>) -> DMatrix<f64> {
    let mut lam = a_tilde.transpose() * m;
    for (i, mut row) in lam.row_iter_mut().enumerate() {
        row /= rule.weights[i];
    }
    lam
}

/// `Λ_1 = αᵀS / w_1`, `Λ_{2:N} = W_{2:N}⁻¹ S`.
pub fn costate_from_derivative_like(s: &DMatrix<f64>, rule: &QuadratureRule, alpha: &DVector<f64>) -> DMatrix<f64> {
    let n = rule.n;
    let mut lam = DMatrix::zeros(n, s.ncols());
    let first = alpha.transpose() * s / rule.weights[0];
    lam.row_mut(0).copy_from(&first);
    for i in 1..n {
        let row = s.row(i - 1) / rule.weights[i];
        lam.row_mut(i).copy_from(&row);
    }
    lam
}

/// `S = Ã_{(:,2:N)}ᵀ M`.
pub fn multiplier_transform(m: &DMatrix<f64>, a_tilde: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a_tilde.ncols();
    a_tilde.columns(1, n - 1).transpose() * m
}

#[derive(Debug, Clone)]
pub struct CostateEstimate {
    /// Λ at the nodes of each interval, `N_k × n_x`.
    pub lambda: Vec<DMatrix<f64>>,
    pub mu: Vec<f64>,
    /// Terminal gradient `∂Φ/∂xf + (∂b/∂xf)ᵀν`.
    pub terminal_gradient: Vec<f64>,
    /// `μ - Λ_1` of the first interval.
    pub initial_gap: Vec<f64>,
    /// `Λ_N - terminal gradient` of the last interval.
    pub terminal_gap: Vec<f64>,
    /// Mesh-point costate `p_k`, `(K+1) × n_x`. Absent for the classic form.
    pub mesh_costate: Option<DMatrix<f64>>,
    /// Intermediate node costates of the recursion, per interval.
    pub q: Vec<DMatrix<f64>>,
}

/// `(μ, terminal gradient)` from the boundary multipliers.
pub fn endpoint_multipliers(problem: &NlpProblem, x: &[f64], lambda: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let ocp = &problem.ocp;
    let e = problem.endpoints(x);
    let nu = DVector::from_vec(problem.boundary_multipliers(lambda));
    let (g0, gf) = ocp.objective_grad(&e)?;
    let mut mu = DVector::from_vec(g0);
    let mut tg = DVector::from_vec(gf);
    if ocp.n_b > 0 {
        let (j0, jf) = ocp.boundary_jac(&e)?;
        mu += j0.transpose() * &nu;
        tg += jf.transpose() * &nu;
    }
    Ok(((-mu).iter().copied().collect(), tg.iter().copied().collect()))
}

/// Λ at the nodes of interval `k`, by the map matching the problem's form.
pub fn interval_costate(problem: &NlpProblem, lambda: &[f64], k: usize) -> DMatrix<f64> {
    let b = &problem.blocks[k];
    let ops = &b.ops;
    let m = problem.interval_multipliers(lambda, k);
    match problem.form {
        Form::Integral => costate_from_integral(&m, &ops.rule, &ops.a_tilde),
        Form::DerivativeLike => costate_from_derivative_like(&m, &ops.rule, &ops.alpha),
        Form::SecondIntegral => {
            let n = ops.n();
            costate_from_integral(&m.rows(0, n - 1).into_owned(), &ops.rule, &ops.a_tilde)
        }
        Form::Classic => classic_costate(&m, &ops.rule),
    }
}

pub fn estimate_costate(problem: &NlpProblem, solution: &NlpSolution) -> Result<CostateEstimate> {
    let x = &solution.primal;
    let lam = &solution.multipliers;
    let lambda: Vec<DMatrix<f64>> = (0..problem.blocks.len())
        .map(|k| interval_costate(problem, lam, k))
        .collect();
    let (mu, terminal_gradient) = endpoint_multipliers(problem, x, lam)?;
    let first = &lambda[0];
    let last = lambda.last().unwrap();
    let initial_gap = (0..problem.n_x()).map(|i| mu[i] - first[(0, i)]).collect();
    let terminal_gap = (0..problem.n_x())
        .map(|i| last[(last.nrows() - 1, i)] - terminal_gradient[i])
        .collect();
    let (mesh_costate, q) = if problem.form == Form::Classic {
        (None, Vec::new())
    } else {
        let (p, q) = superconvergent_costate(problem, x, &terminal_gradient)?;
        (Some(p), q)
    };
    Ok(CostateEstimate {
        lambda,
        mu,
        terminal_gradient,
        initial_gap,
        terminal_gap,
        mesh_costate,
        q,
    })
}

/// Backward mesh recursion. For interval `k` with right mesh costate `p`,
/// solve the linear system
///
/// ```text
/// q_i = p + (Δ_k/2) Σ_j (w_j A_ji / w_i) f_x(j)ᵀ q_j
/// ```
///
/// then set the left mesh costate to `p + (Δ_k/2) Σ_j w_j f_x(j)ᵀ q_j`.
pub fn superconvergent_costate(
    problem: &NlpProblem,
    x: &[f64],
    terminal: &[f64],
) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>)> {
    let n_x = problem.n_x();
    let k_count = problem.blocks.len();
    let mut p = DMatrix::zeros(k_count + 1, n_x);
    for i in 0..n_x {
        p[(k_count, i)] = terminal[i];
    }
    let mut qs = vec![DMatrix::zeros(0, 0); k_count];
    for k in (0..k_count).rev() {
        let b = &problem.blocks[k];
        let n = b.n();
        let w = &b.ops.rule.weights;
        let a = &b.ops.a;
        let xs = problem.interval_states(x, k);
        let us = problem.interval_controls(x, k);
        let mut fx = Vec::with_capacity(n);
        for j in 0..n {
            let xj: Vec<f64> = xs.row(j).iter().copied().collect();
            let uj: Vec<f64> = us.row(j).iter().copied().collect();
            fx.push(problem.ocp.dynamics_jac_x(b.times[j], &xj, &uj, (k, j))?);
        }
        let half = 0.5 * b.delta;
        let dim = n * n_x;
        let mut sys = DMatrix::identity(dim, dim);
        let mut rhs = DVector::zeros(dim);
        for i in 0..n {
            for c in 0..n_x {
                rhs[i * n_x + c] = p[(k + 1, c)];
            }
            for j in 0..n {
                let coef = half * w[j] * a[(j, i)] / w[i];
                if coef == 0.0 {
                    continue;
                }
                for r in 0..n_x {
                    for c in 0..n_x {
                        // (f_xᵀ)_{rc} = f_x[c, r]
                        sys[(i * n_x + r, j * n_x + c)] -= coef * fx[j][(c, r)];
                    }
                }
            }
        }
        let q = sys
            .lu()
            .solve(&rhs)
            .ok_or(Error::SingularInterval { interval: k })?;
        let q = DMatrix::from_fn(n, n_x, |i, c| q[i * n_x + c]);
        let mut left = p.row(k + 1).transpose();
        for j in 0..n {
            let qj = q.row(j).transpose();
            left += half * w[j] * fx[j].transpose() * qj;
        }
        p.row_mut(k).copy_from(&left.transpose());
        qs[k] = q;
    }
    Ok((p, qs))
}

/// Residual matrices `(differential, integral)` of the transformed adjoint system of a
/// single-interval integral or derivative-like solution:
///
/// ```text
/// differential = D†Λ_{2:N} + (Δ/2) f_xᵀΛ - (e_1/w_1)(μ - Λ_1) - (e_N/w_N)(Λ_N - ∇Φ)
/// integral     = Λ - 1Λ_1 - A†[-(Δ/2) f_xᵀΛ + (e_1/w_1)(μ - Λ_1) + (e_N/w_N)(Λ_N - ∇Φ)]
/// ```
pub fn adjoint_residual(problem: &NlpProblem, solution: &NlpSolution) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if !problem.mesh.is_single() || !matches!(problem.form, Form::Integral | Form::DerivativeLike) {
        return Err(Error::InvalidInput(
            "adjoint residuals need a single-interval integral or derivative-like solution".into(),
        ));
    }
    let est = estimate_costate(problem, solution)?;
    let lam = &est.lambda[0];
    let b = &problem.blocks[0];
    let ops = &b.ops;
    let n = ops.n();
    let n_x = problem.n_x();
    let w = &ops.rule.weights;
    let x = &solution.primal;
    let xs = problem.interval_states(x, 0);
    let us = problem.interval_controls(x, 0);
    let half = 0.5 * b.delta;
    // forcing g = -(Δ/2) f_xᵀΛ + boundary terms
    let mut g = DMatrix::zeros(n, n_x);
    for j in 0..n {
        let xj: Vec<f64> = xs.row(j).iter().copied().collect();
        let uj: Vec<f64> = us.row(j).iter().copied().collect();
        let fx = problem.ocp.dynamics_jac_x(b.times[j], &xj, &uj, (0, j))?;
        let v = fx.transpose() * lam.row(j).transpose() * (-half);
        g.row_mut(j).copy_from(&v.transpose());
    }
    for c in 0..n_x {
        g[(0, c)] += (est.mu[c] - lam[(0, c)]) / w[0];
        g[(n - 1, c)] += (lam[(n - 1, c)] - est.terminal_gradient[c]) / w[n - 1];
    }
    let differential = &ops.d_dag * lam.rows(1, n - 1) - &g;
    let mut integral = lam - &ops.a_dag * &g;
    for i in 0..n {
        for c in 0..n_x {
            integral[(i, c)] -= lam[(0, c)];
        }
    }
    Ok((differential, integral))
}

/// Number of samples trimmed from each end before filtering.
const FILTER_CUT: usize = 2;
const FILTER_TAPS: [f64; 3] = [0.25, 0.5, 0.25];

/// Smoothing filter for classic LGL costates: trim two samples from each end,
/// apply the causal FIR `[0.25, 0.5, 0.25]` from a zero state, drop the first
/// two outputs, and extend linearly to the three leading and trailing nodes.
pub fn filter_costate(lgl_points: &[f64], costate_in: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = lgl_points.len();
    if n < 8 {
        return Err(Error::InvalidInput(format!("the costate filter needs at least 8 points, got {n}")));
    }
    if costate_in.nrows() != n {
        return Err(Error::InvalidInput(format!(
            "costate has {} rows for {n} points",
            costate_in.nrows()
        )));
    }
    let cols = costate_in.ncols();
    let section_len = n - 2 * FILTER_CUT;
    // retained outputs pair with nodes FILTER_CUT + 1 ..= n - FILTER_CUT - 2
    let xx = &lgl_points[FILTER_CUT + 1..n - FILTER_CUT - 1];
    let mut out = DMatrix::zeros(n, cols);
    for c in 0..cols {
        let section: Vec<f64> = (0..section_len).map(|i| costate_in[(FILTER_CUT + i, c)]).collect();
        let filtered: Vec<f64> = (0..section_len)
            .map(|i| {
                let mut acc = 0.0;
                for (d, tap) in FILTER_TAPS.iter().enumerate() {
                    if i >= d {
                        acc += tap * section[i - d];
                    }
                }
                acc
            })
            .collect();
        let yy = &filtered[2..];
        debug_assert_eq!(yy.len(), xx.len());
        let head = FILTER_CUT + 1;
        for i in 0..head {
            out[(i, c)] = linear_extrap(xx[0], xx[1], yy[0], yy[1], lgl_points[i]);
        }
        for (i, &v) in yy.iter().enumerate() {
            out[(head + i, c)] = v;
        }
        let m = xx.len();
        for i in n - head..n {
            out[(i, c)] = linear_extrap(xx[m - 2], xx[m - 1], yy[m - 2], yy[m - 1], lgl_points[i]);
        }
    }
    Ok(out)
}

fn linear_extrap(x1: f64, x2: f64, y1: f64, y2: f64, x: f64) -> f64 {
    y1 + (y2 - y1) * (x - x1) / (x2 - x1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::lgl_rule;
    use crate::operators::CollocationOperators;

    #[test]
    fn zero_multipliers_give_zero_costate() {
        let ops = CollocationOperators::new(5).unwrap();
        let m = DMatrix::zeros(4, 2);
        assert_eq!(costate_from_integral(&m, &ops.rule, &ops.a_tilde), DMatrix::zeros(5, 2));
        assert_eq!(costate_from_derivative_like(&m, &ops.rule, &ops.alpha), DMatrix::zeros(5, 2));
        assert_eq!(multiplier_transform(&m, &ops.a_tilde), DMatrix::zeros(4, 2));
    }

    #[test]
    fn two_point_integral_costate() {
        let ops = CollocationOperators::new(2).unwrap();
        let m = DMatrix::from_element(1, 1, 0.7);
        let lam = costate_from_integral(&m, &ops.rule, &ops.a_tilde);
        assert_eq!(lam.as_slice(), &[0.7, 0.7]);
    }

    #[test]
    fn maps_agree_through_transform() {
        for n in [3, 6, 11] {
            let ops = CollocationOperators::new(n).unwrap();
            let m = DMatrix::from_fn(n - 1, 2, |i, j| ((i * 3 + j) as f64 * 0.37).sin());
            let s = multiplier_transform(&m, &ops.a_tilde);
            let a = costate_from_integral(&m, &ops.rule, &ops.a_tilde);
            let b = costate_from_derivative_like(&s, &ops.rule, &ops.alpha);
            assert!((a - b).amax() < 1e-10, "N = {n}");
        }
    }

    #[test]
    fn filter_constant() {
        let rule = lgl_rule(12).unwrap();
        let c = DMatrix::from_element(12, 1, 3.25);
        let out = filter_costate(&rule.nodes, &c).unwrap();
        assert!(out.iter().all(|v| (v - 3.25).abs() < 1e-14));
    }

    #[test]
    fn filter_ramp_on_equispaced_nodes() {
        let n = 14;
        let nodes: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let ramp = DMatrix::from_fn(n, 1, |i, _| nodes[i]);
        let out = filter_costate(&nodes, &ramp).unwrap();
        // retained outputs are the ramp delayed by one sample relative to the
        // trimmed section, which lands them back on their own nodes
        for i in 0..n {
            assert!((out[(i, 0)] - nodes[i]).abs() < 1e-12, "i = {i}");
        }
    }

    #[test]
    fn filter_rejects_short_input() {
        let rule = lgl_rule(7).unwrap();
        assert!(filter_costate(&rule.nodes, &DMatrix::zeros(7, 1)).is_err());
    }
}
