//! Classic LGL pseudospectral collocation: the differential form with a square,
//! rank-deficient differentiation matrix, collocated at all N nodes. Kept as a
//! baseline for costate comparisons and the filter study.

use nalgebra::DMatrix;

use crate::basis::{lgl_rule, QuadratureRule};
use crate::error::Result;
use crate::ocp::{Mesh, OcpDefinition};
use crate::operators::differentiation_matrix;
use crate::transcription::{transcribe, Form, NlpProblem};

#[derive(Debug, Clone)]
pub struct ClassicLglOperators {
    pub rule: QuadratureRule,
    pub d_classic: DMatrix<f64>,
}

impl ClassicLglOperators {
    pub fn new(n_points: usize) -> Result<Self> {
        let rule = lgl_rule(n_points)?;
        let d_classic = classic_differentiation_matrix(&rule);
        Ok(Self { rule, d_classic })
    }
}

/// Differentiation matrix of the degree N-1 interpolant at the LGL nodes.
pub fn classic_differentiation_matrix(rule: &QuadratureRule) -> DMatrix<f64> {
    differentiation_matrix(&rule.nodes, rule.n)
}

/// Rows `-(2/Δ) D X + F = 0` at all N nodes, plus the boundary rows.
pub fn transcribe_classic(ocp: &OcpDefinition, n_points: usize) -> Result<NlpProblem> {
    transcribe(ocp, &Mesh::single(n_points)?, Form::Classic, None)
}

/// `Λ_i = M_i / w_i`, with `M` the canonical collocation multipliers.
pub fn classic_costate(multipliers: &DMatrix<f64>, rule: &QuadratureRule) -> DMatrix<f64> {
    DMatrix::from_fn(multipliers.nrows(), multipliers.ncols(), |i, m| {
        multipliers[(i, m)] / rule.weights[i]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn differentiation_matrix_properties() {
        for n in 2..=12 {
            let ops = ClassicLglOperators::new(n).unwrap();
            let d = &ops.d_classic;
            let ones = nalgebra::DVector::from_element(n, 1.0);
            assert!((d * &ones).amax() < 1e-12);
            for deg in 1..n {
                let v = nalgebra::DVector::from_iterator(n, ops.rule.nodes.iter().map(|t| t.powi(deg as i32)));
                let got = d * v;
                for (i, t) in ops.rule.nodes.iter().enumerate() {
                    let exact = deg as f64 * t.powi(deg as i32 - 1);
                    assert!((got[i] - exact).abs() < 1e-10, "N={n} deg={deg}");
                }
            }
            let rank = d.clone().svd(false, false).rank(1e-10 * d.amax());
            assert_eq!(rank, n - 1, "N={n}");
        }
    }

    #[test]
    fn costate_of_zero_is_zero() {
        let rule = lgl_rule(6).unwrap();
        let m = DMatrix::zeros(6, 2);
        assert_eq!(classic_costate(&m, &rule), m);
    }
}
