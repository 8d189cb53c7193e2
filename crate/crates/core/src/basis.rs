//! Legendre polynomials, Legendre-Gauss-Lobatto (LGL) rules and Lagrange bases.
//!
//! Node indices are zero-based throughout the crate: node `0` is `-1` and node
//! `n - 1` is `+1`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const NEWTON_MAX_ITER: usize = 100;
const NODE_RESIDUAL_TOL: f64 = 1e-14;

/// Evaluate `(P_n(t), P_n'(t))` by the three-term recurrence.
///
/// The derivative uses `P_k' = k P_{k-1} + t P_{k-1}'`, which stays exact at the
/// endpoints (`P_n'(1) = n(n+1)/2`).
pub fn legendre_eval(n: usize, t: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, t);
    let mut dp = 1.0;
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * t * p - kf * p_prev) / (kf + 1.0);
        dp = (kf + 1.0) * p + t * dp;
        p_prev = p;
        p = p_next;
    }
    (p, dp)
}

/// Values `P_0(t), ..., P_nmax(t)`.
pub fn legendre_all(nmax: usize, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(1.0);
    if nmax == 0 {
        return out;
    }
    out.push(t);
    for k in 1..nmax {
        let kf = k as f64;
        out.push(((2.0 * kf + 1.0) * t * out[k] - kf * out[k - 1]) / (kf + 1.0));
    }
    out
}

/// Evaluate the Lobatto polynomial `(t^2 - 1) P_{N-1}'(t)` and its derivative.
///
/// The derivative is written through the Legendre equation as
/// `N (N - 1) P_{N-1}(t)`, which avoids the second derivative.
pub fn lobatto_poly_eval(n_points: usize, t: f64) -> (f64, f64) {
    assert!(n_points >= 2, "Lobatto polynomial needs at least two points");
    let n = n_points - 1;
    let (p, dp) = legendre_eval(n, t);
    let value = (t * t - 1.0) * dp;
    let derivative = (n_points * n) as f64 * p;
    (value, derivative)
}

/// An N-point Legendre-Gauss-Lobatto rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub n: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub barycentric_weights: Vec<f64>,
}

/// Build the N-point LGL rule.
///
/// Interior nodes are the roots of `P_{N-1}'`, found by Newton iteration from
/// Chebyshev-Lobatto guesses and then symmetrised. Endpoints are set to `±1`
/// exactly. Weights are `2 / (N (N-1) P_{N-1}(t_i)^2)`.
pub fn lgl_rule(n_points: usize) -> Result<QuadratureRule> {
    if n_points < 2 {
        return Err(Error::InvalidInput(format!(
            "an LGL rule needs N >= 2 points, got {n_points}"
        )));
    }
    let n = n_points - 1;
    let mut nodes = vec![0.0; n_points];
    nodes[0] = -1.0;
    nodes[n] = 1.0;
    let scale = (n * (n + 1)) as f64 / 2.0;
    let nn1 = (n * (n + 1)) as f64;

    for i in 1..n {
        let mut x = -(std::f64::consts::PI * i as f64 / n as f64).cos();
        for _ in 0..NEWTON_MAX_ITER {
            let (p, dp) = legendre_eval(n, x);
            let ddp = (2.0 * x * dp - nn1 * p) / (1.0 - x * x);
            let step = dp / ddp;
            x -= step;
            if step.abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-3) {
                break;
            }
        }
        let residual = legendre_eval(n, x).1.abs() / scale;
        if residual > NODE_RESIDUAL_TOL {
            return Err(Error::NodeSolve {
                n: n_points,
                residual,
            });
        }
        nodes[i] = x;
    }

    // symmetrise and pin the centre node
    for i in 1..n_points / 2 {
        let j = n - i;
        let half = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -half;
        nodes[j] = half;
    }
    if n_points % 2 == 1 {
        nodes[n_points / 2] = 0.0;
    }
    if nodes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::NodeSolve {
            n: n_points,
            residual: f64::NAN,
        });
    }

    let weights = nodes
        .iter()
        .map(|&x| {
            let p = legendre_eval(n, x).0;
            2.0 / (nn1 * p * p)
        })
        .collect();
    let barycentric_weights = barycentric_weights(&nodes);
    Ok(QuadratureRule {
        n: n_points,
        nodes,
        weights,
        barycentric_weights,
    })
}

/// Barycentric weights `1 / prod_{k != j} (x_j - x_k)`, normalised to unit max.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let mut w: Vec<f64> = nodes
        .iter()
        .enumerate()
        .map(|(j, &xj)| {
            let prod: f64 = nodes
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .map(|(_, &xk)| xj - xk)
                .product();
            1.0 / prod
        })
        .collect();
    let max = w.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    w.iter_mut().for_each(|v| *v /= max);
    w
}

/// Barycentric evaluation of every Lagrange basis polynomial at `t`.
fn lagrange_all(nodes: &[f64], bary: &[f64], t: f64) -> Vec<f64> {
    if let Some(hit) = nodes.iter().position(|&x| x == t) {
        let mut out = vec![0.0; nodes.len()];
        out[hit] = 1.0;
        return out;
    }
    let terms: Vec<f64> = nodes
        .iter()
        .zip(bary)
        .map(|(&x, &b)| b / (t - x))
        .collect();
    let denom: f64 = terms.iter().sum();
    terms.into_iter().map(|v| v / denom).collect()
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Lagrange basis polynomial `L_j(t)` (zero-based `j`).
    pub fn lagrange(&self, j: usize, t: f64) -> f64 {
        assert!(j < self.n, "basis index {j} out of range for N = {}", self.n);
        lagrange_all(&self.nodes, &self.barycentric_weights, t)[j]
    }

    /// All Lagrange basis values at `t`.
    pub fn lagrange_row(&self, t: f64) -> Vec<f64> {
        lagrange_all(&self.nodes, &self.barycentric_weights, t)
    }

    /// `∫_{-1}^{t} L_j(s) ds` for every `j`.
    ///
    /// Each `L_j` is expanded in Legendre polynomials through the discrete
    /// transform on the LGL nodes (the last mode uses the discrete norm
    /// `2 / (N-1)`), then integrated term-wise with
    /// `∫ P_n = (P_{n+1} - P_{n-1}) / (2n + 1)`.
    pub fn lagrange_integrals(&self, t: f64) -> Vec<f64> {
        let n = self.n;
        let p_t = legendre_all(n, t);
        let integ: Vec<f64> = (0..n)
            .map(|k| {
                if k == 0 {
                    t + 1.0
                } else {
                    (p_t[k + 1] - p_t[k - 1]) / (2 * k + 1) as f64
                }
            })
            .collect();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&xj, &wj)| {
                let p_j = legendre_all(n - 1, xj);
                (0..n)
                    .map(|k| {
                        let norm = if k == n - 1 {
                            2.0 / (n - 1) as f64
                        } else {
                            2.0 / (2 * k + 1) as f64
                        };
                        wj * p_j[k] / norm * integ[k]
                    })
                    .sum()
            })
            .collect()
    }

    /// Quadrature of samples taken at the nodes.
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        self.weights.iter().zip(samples).map(|(w, f)| w * f).sum()
    }
}

/// Reusable barycentric interpolant through `(nodes[i], values.row(i))`.
#[derive(Debug, Clone)]
pub struct Interpolant {
    nodes: Vec<f64>,
    bary: Vec<f64>,
    values: DMatrix<f64>,
}

impl Interpolant {
    pub fn new(nodes: &[f64], values: DMatrix<f64>) -> Result<Self> {
        if nodes.len() != values.nrows() {
            return Err(Error::InvalidInput(format!(
                "{} nodes but {} value rows",
                nodes.len(),
                values.nrows()
            )));
        }
        if nodes.is_empty() {
            return Err(Error::InvalidInput("no interpolation nodes".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "interpolation nodes must be strictly increasing (no duplicates)".into(),
            ));
        }
        Ok(Self {
            nodes: nodes.to_vec(),
            bary: barycentric_weights(nodes),
            values,
        })
    }

    /// Build from a non-monotone support set (e.g. the LGL nodes plus one extra point).
    pub fn from_unordered(nodes: &[f64], values: DMatrix<f64>) -> Result<Self> {
        let mut order: Vec<usize> = (0..nodes.len()).collect();
        order.sort_by(|&a, &b| nodes[a].total_cmp(&nodes[b]));
        let sorted: Vec<f64> = order.iter().map(|&i| nodes[i]).collect();
        let rows: Vec<_> = order.iter().map(|&i| values.row(i).into_owned()).collect();
        Self::new(&sorted, DMatrix::from_rows(&rows))
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let basis = lagrange_all(&self.nodes, &self.bary, t);
        (0..self.values.ncols())
            .map(|c| {
                basis
                    .iter()
                    .enumerate()
                    .map(|(i, b)| b * self.values[(i, c)])
                    .sum()
            })
            .collect()
    }
}

/// One-shot barycentric interpolation of `values` (one row per node) at `t`.
pub fn interpolate(nodes: &[f64], values: &DMatrix<f64>, t: f64) -> Result<Vec<f64>> {
    Ok(Interpolant::new(nodes, values.clone())?.eval(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn legendre_values() {
        assert_eq!(legendre_eval(0, 0.3), (1.0, 0.0));
        let (p, dp) = legendre_eval(2, 0.0);
        assert_abs_diff_eq!(p, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(dp, 0.0, epsilon = 1e-15);
        assert_eq!(legendre_eval(5, 1.0), (1.0, 15.0));
        for n in 0..12 {
            let (p, dp) = legendre_eval(n, -1.0);
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(p, sign);
            assert_eq!(dp, -sign * (n * (n + 1)) as f64 / 2.0);
        }
    }

    #[test]
    fn lobatto_values() {
        let (v, d) = lobatto_poly_eval(3, 0.0);
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d, -3.0, epsilon = 1e-14);
        let (v, d) = lobatto_poly_eval(3, -1.0);
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d, 6.0, epsilon = 1e-14);
        let (v, d) = lobatto_poly_eval(2, 0.5);
        assert_abs_diff_eq!(v, -0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(d, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn small_rules() {
        let r2 = lgl_rule(2).unwrap();
        assert_eq!(r2.nodes, vec![-1.0, 1.0]);
        assert_abs_diff_eq!(r2.weights[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r2.weights[1], 1.0, epsilon = 1e-15);

        let r3 = lgl_rule(3).unwrap();
        assert_eq!(r3.nodes, vec![-1.0, 0.0, 1.0]);
        for (w, e) in r3.weights.iter().zip([1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0]) {
            assert_abs_diff_eq!(*w, e, epsilon = 1e-15);
        }
    }

    #[test]
    fn rejects_tiny_rule() {
        assert!(lgl_rule(1).is_err());
        assert!(lgl_rule(0).is_err());
    }

    #[test]
    fn lagrange_examples() {
        let r3 = lgl_rule(3).unwrap();
        assert_eq!(r3.lagrange(1, 0.0), 1.0);
        assert_abs_diff_eq!(r3.lagrange(0, 0.5), -0.125, epsilon = 1e-15);
        for t in [-0.9, -0.2, 0.33, 0.71] {
            let s: f64 = (0..3).map(|j| r3.lagrange(j, t)).sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn interpolate_rejects_duplicates() {
        let v = DMatrix::from_element(3, 1, 1.0);
        assert!(interpolate(&[0.0, 0.0, 1.0], &v, 0.5).is_err());
        assert!(interpolate(&[0.0, 2.0, 1.0], &v, 0.5).is_err());
        assert!(interpolate(&[0.0, 1.0], &v, 0.5).is_err());
    }

    #[test]
    fn interpolate_constant_and_nodes() {
        let nodes = [-1.0, -0.3, 0.4, 1.0];
        let values = DMatrix::from_column_slice(4, 2, &[2.0, 2.0, 2.0, 2.0, 1.0, 5.0, -3.0, 0.5]);
        let at = interpolate(&nodes, &values, 0.123).unwrap();
        assert_abs_diff_eq!(at[0], 2.0, epsilon = 1e-14);
        let exact = interpolate(&nodes, &values, 0.4).unwrap();
        assert_eq!(exact[1], -3.0);
    }

    #[test]
    fn lagrange_integrals_n2() {
        let r2 = lgl_rule(2).unwrap();
        let row = r2.lagrange_integrals(0.0);
        assert_abs_diff_eq!(row[0], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(row[1], 0.25, epsilon = 1e-15);
    }
}
