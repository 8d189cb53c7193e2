//! The collocation operator family for one LGL rule.
//!
//! Matrices are dense `nalgebra` matrices with zero-based indices. For a rule
//! with `N` nodes:
//!
//! | field    | shape        | meaning                                                  |
//! |----------|--------------|----------------------------------------------------------|
//! | `a`      | N × N        | `A_ij = ∫_{-1}^{τ_i} L_j`                                |
//! | `a_tilde`| (N-1) × N    | rows `1..N` of `a`                                       |
//! | `e`      | (N-1) × N    | `[Ã_{:,1:}]^{-1} [-1 | I]`                               |
//! | `alpha`  | N-1          | `[Ã_{:,1:}]^{-1} Ã_{:,0}`                                |
//! | `a_dag`  | N × N        | adjoint integration matrix                               |
//! | `d_dag`  | N × (N-1)    | adjoint differentiation matrix acting on `Λ_{1:}`        |
//! | `d_ddag` | N × N        | `[A†]^{-1} [[0, 0], [-1, I]]`                            |
//! | `b`      | N × N        | `Ã` stacked on the integral row to `tau_extra`           |

use nalgebra::{DMatrix, DVector};

use crate::basis::{barycentric_weights, legendre_all, lgl_rule, lobatto_poly_eval, QuadratureRule};
use crate::error::{Error, Result};

/// Minimum distance between the extra support point and any LGL node.
pub const TAU_EXTRA_MIN_GAP: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct CollocationOperators {
    pub rule: QuadratureRule,
    pub a: DMatrix<f64>,
    pub a_tilde: DMatrix<f64>,
    pub e: DMatrix<f64>,
    pub alpha: DVector<f64>,
    pub a_dag: DMatrix<f64>,
    pub d_dag: DMatrix<f64>,
    pub d_ddag: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub tau_extra: f64,
}

impl CollocationOperators {
    /// Build every operator for the N-point rule, with the default extra point.
    pub fn new(n_points: usize) -> Result<Self> {
        Self::from_rule(lgl_rule(n_points)?, None)
    }

    pub fn with_tau_extra(n_points: usize, tau_extra: f64) -> Result<Self> {
        Self::from_rule(lgl_rule(n_points)?, Some(tau_extra))
    }

    pub fn from_rule(rule: QuadratureRule, tau_extra: Option<f64>) -> Result<Self> {
        let tau_extra = tau_extra.unwrap_or_else(|| default_tau_extra(&rule));
        let a = build_a(&rule);
        let a_tilde = a.rows(1, rule.n - 1).into_owned();
        let alpha = build_alpha(&rule, &a_tilde)?;
        let e = build_e(&rule, &alpha);
        let a_dag = build_a_dag(&rule, &a);
        let d_dag = build_d_dag(&rule, &e, &alpha);
        let d_ddag = build_d_ddag(&a_dag)?;
        let b = build_b(&rule, &a, tau_extra)?;
        Ok(Self {
            rule,
            a,
            a_tilde,
            e,
            alpha,
            a_dag,
            d_dag,
            d_ddag,
            b,
            tau_extra,
        })
    }

    pub fn n(&self) -> usize {
        self.rule.n
    }

    /// Trailing square block `Ã_{:,1:N}` whose inverse defines `E`.
    pub fn a_tilde_trailing(&self) -> DMatrix<f64> {
        let n = self.n();
        self.a_tilde.columns(1, n - 1).into_owned()
    }

    /// Integral row `∫_{-1}^{tau_extra} L_j`, i.e. the last row of `b`.
    pub fn extra_row(&self) -> DVector<f64> {
        self.b.row(self.n() - 1).transpose()
    }

    pub fn identity_residuals(&self) -> IdentityResiduals {
        IdentityResiduals::compute(self)
    }

    /// Named operators in a fixed order, for dumps.
    pub fn named_matrices(&self) -> Vec<(&'static str, DMatrix<f64>)> {
        vec![
            ("A", self.a.clone()),
            ("A_tilde", self.a_tilde.clone()),
            ("E", self.e.clone()),
            ("alpha", DMatrix::from_column_slice(self.alpha.len(), 1, self.alpha.as_slice())),
            ("A_dag", self.a_dag.clone()),
            ("D_dag", self.d_dag.clone()),
            ("D_ddag", self.d_ddag.clone()),
            ("B", self.b.clone()),
        ]
    }
}

/// Midpoint of the widest gap between consecutive nodes (leftmost on ties).
pub fn default_tau_extra(rule: &QuadratureRule) -> f64 {
    let mut best = (0.0, 0.0);
    for w in rule.nodes.windows(2) {
        let gap = w[1] - w[0];
        if gap > best.0 {
            best = (gap, 0.5 * (w[0] + w[1]));
        }
    }
    best.1
}

/// Integration matrix, with rows `∫_{-1}^{τ_i} L_j` from the exact Legendre expansion.
pub fn build_a(rule: &QuadratureRule) -> DMatrix<f64> {
    let n = rule.n;
    let mut a = DMatrix::zeros(n, n);
    for i in 1..n {
        let row = rule.lagrange_integrals(rule.nodes[i]);
        for (j, v) in row.into_iter().enumerate() {
            a[(i, j)] = v;
        }
    }
    // the last row is the quadrature itself
    for j in 0..n {
        a[(n - 1, j)] = rule.weights[j];
    }
    a
}

fn solve_columns(lhs: &DMatrix<f64>, rhs: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    lhs.clone()
        .lu()
        .solve(rhs)
        .ok_or_else(|| Error::OperatorDefect(format!("{what}: singular matrix")))
}

/// `α` from the linear solve, cross-checked against the Lobatto closed form
/// `α_j = -L̇_N(τ_{j+1}) / L̇_N(τ_0)`. The closed form is returned.
pub fn build_alpha(rule: &QuadratureRule, a_tilde: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = rule.n;
    let trailing = a_tilde.columns(1, n - 1).into_owned();
    let first = a_tilde.columns(0, 1).into_owned();
    let solved = solve_columns(&trailing, &first, "alpha")?;
    let closed = alpha_closed_form(rule);
    let gap = (solved.column(0) - &closed).amax();
    if gap > alpha_tolerance(n) {
        return Err(Error::OperatorDefect(format!(
            "alpha from linear solve and closed form differ by {gap:e} (N = {n})"
        )));
    }
    Ok(closed)
}

pub(crate) fn alpha_tolerance(n: usize) -> f64 {
    1e-11 * (n as f64 / 30.0).powi(2).max(1.0)
}

pub fn alpha_closed_form(rule: &QuadratureRule) -> DVector<f64> {
    let n = rule.n;
    let d0 = lobatto_poly_eval(n, rule.nodes[0]).1;
    DVector::from_iterator(
        n - 1,
        rule.nodes[1..]
            .iter()
            .map(|&t| -lobatto_poly_eval(n, t).1 / d0),
    )
}

/// `E` through `E = D_{1:,:} + α D_{0,:}`, with `D` the nodal differentiation
/// matrix. Both sides agree on polynomials of degree `N-1`, so this equals
/// `[Ã_{:,1:}]^{-1} [-1 | I]` while avoiding the ill-conditioned solve.
pub fn build_e(rule: &QuadratureRule, alpha: &DVector<f64>) -> DMatrix<f64> {
    let n = rule.n;
    let d = differentiation_matrix(&rule.nodes, n);
    DMatrix::from_fn(n - 1, n, |i, j| d[(i + 1, j)] + alpha[i] * d[(0, j)])
}

/// `E` from the defining linear solve.
pub fn build_e_by_solve(a_tilde: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = a_tilde.nrows();
    let trailing = a_tilde.columns(1, m).into_owned();
    let mut rhs = DMatrix::zeros(m, m + 1);
    for i in 0..m {
        rhs[(i, 0)] = -1.0;
        rhs[(i, i + 1)] = 1.0;
    }
    solve_columns(&trailing, &rhs, "E")
}

/// `A†_ij = w_j - (w_j / w_i)(1 - δ_{i,N-1}) A_ji`.
pub fn build_a_dag(rule: &QuadratureRule, a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = rule.n;
    let w = &rule.weights;
    DMatrix::from_fn(n, n, |i, j| {
        if i == n - 1 {
            w[j]
        } else {
            w[j] - w[j] / w[i] * a[(j, i)]
        }
    })
}

/// Adjoint differentiation matrix acting on `Λ_{1..N}`.
pub fn build_d_dag(rule: &QuadratureRule, e: &DMatrix<f64>, alpha: &DVector<f64>) -> DMatrix<f64> {
    let n = rule.n;
    let w = &rule.weights;
    DMatrix::from_fn(n, n - 1, |i, j| {
        if i == 0 {
            -w[j + 1] / w[0] * e[(j, 0)] - w[j + 1] / (w[0] * w[0]) * alpha[j]
        } else {
            let corner = if i == n - 1 && j == n - 2 { 1.0 / w[n - 1] } else { 0.0 };
            -w[j + 1] / w[i] * e[(j, i)] + corner
        }
    })
}

pub fn build_d_ddag(a_dag: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a_dag.nrows();
    let mut rhs = DMatrix::zeros(n, n);
    for i in 1..n {
        rhs[(i, 0)] = -1.0;
        rhs[(i, i)] = 1.0;
    }
    solve_columns(a_dag, &rhs, "D_ddag")
}

pub fn check_tau_extra(rule: &QuadratureRule, tau_extra: f64) -> Result<()> {
    if !(tau_extra > -1.0 && tau_extra < 1.0) {
        return Err(Error::InvalidInput(format!(
            "tau_extra = {tau_extra} must lie strictly inside (-1, 1)"
        )));
    }
    let gap = rule
        .nodes
        .iter()
        .map(|x| (x - tau_extra).abs())
        .fold(f64::INFINITY, f64::min);
    if gap < TAU_EXTRA_MIN_GAP {
        return Err(Error::InvalidInput(format!(
            "tau_extra = {tau_extra} coincides with an LGL node (distance {gap:e})"
        )));
    }
    Ok(())
}

pub fn build_b(rule: &QuadratureRule, a: &DMatrix<f64>, tau_extra: f64) -> Result<DMatrix<f64>> {
    check_tau_extra(rule, tau_extra)?;
    let n = rule.n;
    let extra = rule.lagrange_integrals(tau_extra);
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i + 1 < n {
            a[(i + 1, j)]
        } else {
            extra[j]
        }
    }))
}

/// Derivatives at `support[..rows]` of the Lagrange basis on `support`.
///
/// `support` need not be sorted. Row `i` differentiates the interpolant at
/// `support[i]`.
pub fn differentiation_matrix(support: &[f64], rows: usize) -> DMatrix<f64> {
    let m = support.len();
    let bary = barycentric_weights(support);
    let mut d = DMatrix::zeros(rows, m);
    for i in 0..rows {
        let mut diag = 0.0;
        for j in 0..m {
            if i != j {
                let v = bary[j] / bary[i] / (support[i] - support[j]);
                d[(i, j)] = v;
                diag -= v;
            }
        }
        d[(i, i)] = diag;
    }
    d
}

/// Differentiation matrix of the full-rank derivative form with the extra
/// support point: N × (N+1), columns ordered `(τ_0, ..., τ_{N-1}, tau_extra)`.
pub fn extended_differentiation_matrix(rule: &QuadratureRule, tau_extra: f64) -> DMatrix<f64> {
    let mut support = rule.nodes.clone();
    support.push(tau_extra);
    differentiation_matrix(&support, rule.n)
}

/// Max-norm residuals of the operator identities. Residuals of derivative
/// checks are divided by `max(1, |expected|_∞)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct IdentityResiduals {
    pub a_first_row: f64,
    pub a_last_row_weights: f64,
    pub a_row_sums: f64,
    pub a_exactness: f64,
    pub e_annihilates_ones: f64,
    pub e_inverts_a: f64,
    pub alpha_closed_form: f64,
    pub adag_first_row_null: f64,
    pub identity_reconstruction: f64,
    pub d_dag_exact: f64,
    pub a_dag_integrates: f64,
    pub d_ddag_exact: f64,
    pub b_inverse: f64,
    pub b_condition: f64,
}

impl IdentityResiduals {
    fn compute(ops: &CollocationOperators) -> Self {
        let rule = &ops.rule;
        let n = rule.n;
        let nodes = &rule.nodes;
        let w = DVector::from_column_slice(&rule.weights);
        let w_tail = DMatrix::from_diagonal(&w.rows(1, n - 1).into_owned());

        let a_first_row = ops.a.row(0).amax();
        let a_last_row_weights = (ops.a.row(n - 1).transpose() - &w).amax();
        let a_row_sums = (0..n)
            .map(|i| (ops.a.row(i).sum() - (nodes[i] + 1.0)).abs())
            .fold(0.0, f64::max);

        // A integrates P_k, k <= N-1, exactly from -1 to each node
        let mut a_exactness: f64 = 0.0;
        for k in 0..n {
            let samples = legendre_samples(nodes, k);
            let got = &ops.a * &samples;
            for (i, &t) in nodes.iter().enumerate() {
                let exact = legendre_antiderivative(k, t);
                a_exactness = a_exactness.max((got[i] - exact).abs());
            }
        }

        let e_annihilates_ones = (&ops.e * DVector::from_element(n, 1.0)).amax();
        let ea = ops.e.columns(1, n - 1) * ops.a.view((1, 1), (n - 1, n - 1));
        let e_inverts_a = (ea - DMatrix::identity(n - 1, n - 1)).amax();

        let trailing = ops.a_tilde_trailing();
        let first = ops.a_tilde.column(0).into_owned();
        let alpha_closed_form = trailing
            .lu()
            .solve(&first)
            .map(|s| (s - &ops.alpha).amax())
            .unwrap_or(f64::INFINITY);

        let adag_first_row_null = (ops.a_dag.row(0) * &ops.d_dag).amax();
        let ones = DVector::from_element(n - 1, 1.0);
        let recon = &ones * (ops.alpha.transpose() * &w_tail) / rule.weights[0]
            + ops.a_dag.rows(1, n - 1) * &ops.d_dag;
        let identity_reconstruction = (recon - DMatrix::identity(n - 1, n - 1)).amax();

        // D† on degree <= N-2 polynomials (they satisfy the v_0 constraint automatically)
        let mut d_dag_exact: f64 = 0.0;
        let mut d_ddag_exact: f64 = 0.0;
        let mut a_dag_integrates: f64 = 0.0;
        for k in 0..n.saturating_sub(1) {
            let v = legendre_samples(nodes, k);
            let dv = legendre_derivative_samples(nodes, k);
            let scale = dv.amax().max(1.0);
            let got = &ops.d_dag * v.rows(1, n - 1);
            d_dag_exact = d_dag_exact.max((got - &dv).amax() / scale);
            let got = &ops.d_ddag * &v;
            d_ddag_exact = d_ddag_exact.max((got - &dv).amax() / scale);
            // λ(τ_i) = λ(-1) + (A† λ̇)_i
            let integrated = &ops.a_dag * &dv;
            for i in 0..n {
                let err = (v[0] + integrated[i] - v[i]).abs();
                a_dag_integrates = a_dag_integrates.max(err);
            }
        }

        let d_ext = extended_differentiation_matrix(rule, ops.tau_extra);
        let trailing_d = d_ext.columns(1, n).into_owned();
        let b_inverse = (&ops.b * &trailing_d - DMatrix::identity(n, n)).amax();
        let sv = ops.b.clone().svd(false, false).singular_values;
        let b_condition = sv.max() / sv.min();

        Self {
            a_first_row,
            a_last_row_weights,
            a_row_sums,
            a_exactness,
            e_annihilates_ones,
            e_inverts_a,
            alpha_closed_form,
            adag_first_row_null,
            identity_reconstruction,
            d_dag_exact,
            a_dag_integrates,
            d_ddag_exact,
            b_inverse,
            b_condition,
        }
    }

    /// Named identity residuals (everything except the condition number).
    pub fn named(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("a_first_row", self.a_first_row),
            ("a_last_row_weights", self.a_last_row_weights),
            ("a_row_sums", self.a_row_sums),
            ("a_exactness", self.a_exactness),
            ("e_annihilates_ones", self.e_annihilates_ones),
            ("e_inverts_a", self.e_inverts_a),
            ("alpha_closed_form", self.alpha_closed_form),
            ("adag_first_row_null", self.adag_first_row_null),
            ("identity_reconstruction", self.identity_reconstruction),
            ("d_dag_exact", self.d_dag_exact),
            ("a_dag_integrates", self.a_dag_integrates),
            ("d_ddag_exact", self.d_ddag_exact),
            ("b_inverse", self.b_inverse),
        ]
    }

    pub fn max_residual(&self) -> f64 {
        self.named().into_iter().map(|(_, v)| v).fold(0.0, f64::max)
    }
}

fn legendre_samples(nodes: &[f64], k: usize) -> DVector<f64> {
    DVector::from_iterator(nodes.len(), nodes.iter().map(|&t| legendre_all(k, t)[k]))
}

fn legendre_derivative_samples(nodes: &[f64], k: usize) -> DVector<f64> {
    DVector::from_iterator(
        nodes.len(),
        nodes.iter().map(|&t| crate::basis::legendre_eval(k, t).1),
    )
}

fn legendre_antiderivative(k: usize, t: f64) -> f64 {
    if k == 0 {
        t + 1.0
    } else {
        let p = legendre_all(k + 1, t);
        (p[k + 1] - p[k - 1]) / (2 * k + 1) as f64
    }
}
