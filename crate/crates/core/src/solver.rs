//! Newton-KKT solver for equality-constrained NLPs.
//!
//! Solves `min f(x)` subject to `c(x) = 0` by Newton's method on the
//! stationarity and feasibility equations of `L = f + λᵀc`. Each step solves
//!
//! ```text
//! [ H + δ_w I   Jᵀ    ] [dx]     [∇f + Jᵀλ]
//! [ J          -δ_c I ] [dλ] = - [   c    ]
//! ```
//!
//! `δ_w` is raised until the matrix has inertia `(n, m, 0)`, which keeps the
//! iteration away from maxima and saddle points; `δ_c` is switched on when the
//! matrix has a zero eigenvalue, as with rank-deficient Jacobians. Steps are accepted on decrease of `‖KKT‖²` or of `f + ρ‖c‖₁`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::Result;
use crate::linalg::{block_inertia, dot, inf_norm, reverse_cuthill_mckee, solve_refined, BandLu, Triplets};

/// An equality-constrained nonlinear program.
pub trait Nlp {
    fn n_vars(&self) -> usize;
    fn n_cons(&self) -> usize;
    fn objective(&self, x: &[f64]) -> Result<f64>;
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn constraints(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn jacobian(&self, x: &[f64]) -> Result<Triplets>;

    /// Hessian of `f + λᵀc`. The default is a symmetrised one-sided finite
    /// difference of the Lagrangian gradient, dense in `x`.
    fn hessian(&self, x: &[f64], lambda: &[f64]) -> Result<Triplets> {
        fd_hessian(self, x, lambda)
    }
}

pub(crate) const HESSIAN_STEP: f64 = 1e-6;

pub fn lagrangian_gradient<P: Nlp + ?Sized>(p: &P, x: &[f64], lambda: &[f64]) -> Result<Vec<f64>> {
    let mut g = p.gradient(x)?;
    let jt = p.jacobian(x)?.tr_mul_vec(lambda);
    for (gi, ji) in g.iter_mut().zip(&jt) {
        *gi += ji;
    }
    Ok(g)
}

pub fn fd_hessian<P: Nlp + ?Sized>(p: &P, x: &[f64], lambda: &[f64]) -> Result<Triplets> {
    let n = x.len();
    let g0 = lagrangian_gradient(p, x, lambda)?;
    let mut cols = vec![vec![0.0; n]; n];
    let mut xp = x.to_vec();
    for k in 0..n {
        let h = HESSIAN_STEP * x[k].abs().max(1.0);
        xp[k] = x[k] + h;
        let g = lagrangian_gradient(p, &xp, lambda)?;
        xp[k] = x[k];
        for i in 0..n {
            cols[k][i] = (g[i] - g0[i]) / h;
        }
    }
    let mut t = Triplets::new(n, n);
    for i in 0..n {
        for j in 0..n {
            t.push(i, j, 0.5 * (cols[j][i] + cols[i][j]));
        }
    }
    Ok(t)
}

/// Largest entry of `|J - J_fd|`, relative to `max(1, max|J|)`, with `J_fd`
/// the central difference of the constraints at `x`.
pub fn jacobian_check<P: Nlp + ?Sized>(p: &P, x: &[f64]) -> Result<f64> {
    let jac = p.jacobian(x)?.to_dense();
    let mut fd = DMatrix::zeros(p.n_cons(), x.len());
    let mut xp = x.to_vec();
    for k in 0..x.len() {
        let h = 1e-6 * x[k].abs().max(1.0);
        xp[k] = x[k] + h;
        let cp = p.constraints(&xp)?;
        xp[k] = x[k] - h;
        let cm = p.constraints(&xp)?;
        xp[k] = x[k];
        for i in 0..p.n_cons() {
            fd[(i, k)] = (cp[i] - cm[i]) / (2.0 * h);
        }
    }
    Ok((&jac - fd).amax() / jac.amax().max(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    LineSearchFailure,
    SingularSystem,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Converged => "converged",
            Self::MaxIterations => "max_iterations",
            Self::LineSearchFailure => "line_search_failure",
            Self::SingularSystem => "singular_system",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NlpSolution {
    pub primal: Vec<f64>,
    pub multipliers: Vec<f64>,
    /// `max(‖∇L‖∞, ‖c‖∞)` at the returned point.
    pub kkt_residual: f64,
    pub stationarity: f64,
    pub feasibility: f64,
    pub objective: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    /// KKT residual after each iteration, starting with the initial point.
    /// Restarts append their own histories.
    pub history: Vec<f64>,
}

impl NlpSolution {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Largest primal shift `δ_w` tried before giving up on an iteration.
    pub reg_max: f64,
    pub armijo: f64,
    pub min_step: f64,
    pub refinement_rounds: usize,
    pub pivot_tol: f64,
    /// Start [`solve`] from least-squares multipliers instead of zero.
    pub least_squares_start: bool,
    /// Relative sizes of the deterministic primal perturbations tried, in
    /// order, when the iteration from the guess fails.
    pub restart_perturbations: [f64; 3],
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100,
            reg_max: 1e10,
            armijo: 1e-4,
            min_step: 1e-10,
            refinement_rounds: 3,
            pivot_tol: 1e-13,
            least_squares_start: true,
            restart_perturbations: [1e-3, 1e-2, 1e-1],
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// `(‖∇f + Jᵀλ‖∞, ‖c‖∞)`.
pub fn kkt_residual<P: Nlp + ?Sized>(p: &P, x: &[f64], lambda: &[f64]) -> Result<(f64, f64)> {
    let g = lagrangian_gradient(p, x, lambda)?;
    let c = p.constraints(x)?;
    Ok((inf_norm(&g), inf_norm(&c)))
}

struct Point {
    x: Vec<f64>,
    lambda: Vec<f64>,
    grad_l: Vec<f64>,
    c: Vec<f64>,
}

impl Point {
    fn eval<P: Nlp + ?Sized>(p: &P, x: Vec<f64>, lambda: Vec<f64>) -> Result<Self> {
        let grad_l = lagrangian_gradient(p, &x, &lambda)?;
        let c = p.constraints(&x)?;
        Ok(Self { x, lambda, grad_l, c })
    }

    fn merit(&self) -> f64 {
        self.grad_l.iter().chain(&self.c).map(|v| v * v).sum()
    }

    fn residual(&self) -> f64 {
        inf_norm(&self.grad_l).max(inf_norm(&self.c))
    }

    fn finite(&self) -> bool {
        self.grad_l.iter().chain(&self.c).all(|v| v.is_finite())
    }
}

fn assemble_kkt(h: &Triplets, j: &Triplets, n: usize, m: usize) -> Triplets {
    let mut k = Triplets::new(n + m, n + m);
    k.entries.reserve(h.entries.len() + 2 * j.entries.len());
    for &(r, c, v) in &h.entries {
        k.push(r, c, v);
    }
    for &(r, c, v) in &j.entries {
        k.push(n + r, c, v);
        k.push(c, n + r, v);
    }
    k
}

/// Wrap a known point as a solution, `converged` iff its KKT residual is
/// within `tol`.
pub fn evaluate<P: Nlp + ?Sized>(problem: &P, x: Vec<f64>, lambda: Vec<f64>, tol: f64) -> Result<NlpSolution> {
    let (stationarity, feasibility) = kkt_residual(problem, &x, &lambda)?;
    let kkt = stationarity.max(feasibility);
    Ok(NlpSolution {
        objective: problem.objective(&x)?,
        primal: x,
        multipliers: lambda,
        kkt_residual: kkt,
        stationarity,
        feasibility,
        iterations: 0,
        status: if kkt <= tol { SolveStatus::Converged } else { SolveStatus::MaxIterations },
        history: vec![kkt],
    })
}

/// Solve `problem` from `guess`. Initial multipliers are the least-squares
/// estimate at `guess`, or zero when that is disabled or fails.
pub fn solve<P: Nlp + ?Sized>(problem: &P, guess: &[f64], opts: &SolverOptions) -> Result<NlpSolution> {
    let m = problem.n_cons();
    let lambda0 = if opts.least_squares_start && guess.len() == problem.n_vars() {
        least_squares_multipliers(problem, guess, opts)?.unwrap_or_else(|| vec![0.0; m])
    } else {
        vec![0.0; m]
    };
    solve_with_multipliers(problem, guess, &lambda0, opts)
}

/// `argmin ‖∇f + Jᵀλ‖` from the regularised augmented system
/// `[I Jᵀ; J -εI] [r; λ] = [-∇f; 0]`. `None` if the system cannot be factored.
pub fn least_squares_multipliers<P: Nlp + ?Sized>(
    problem: &P,
    x: &[f64],
    opts: &SolverOptions,
) -> Result<Option<Vec<f64>>> {
    let n = problem.n_vars();
    let m = problem.n_cons();
    let jac = problem.jacobian(x)?;
    let k = augmented(&jac, n, m);
    let perm = reverse_cuthill_mckee(n + m, &k.entries);
    let lu = match BandLu::factor(&k, &perm, opts.pivot_tol) {
        Ok(lu) => lu,
        Err(_) => return Ok(None),
    };
    let mut rhs: Vec<f64> = problem.gradient(x)?.iter().map(|g| -g).collect();
    rhs.resize(n + m, 0.0);
    let sol = solve_refined(&lu, &k, &rhs, opts.refinement_rounds);
    let lambda = sol[n..].to_vec();
    Ok(lambda.iter().all(|v| v.is_finite()).then_some(lambda))
}

/// Solve from `(guess, lambda0)`. If that fails, restart from the perturbed
/// guesses `x_i + a·max(1, |x_i|)·sin(1.3 (i + 1))` for each `a` in
/// [`SolverOptions::restart_perturbations`]; a restart is only kept if it
/// converges. A guess sitting exactly on a degenerate point (a control with
/// zero first-order influence on every constraint) needs this.
pub fn solve_with_multipliers<P: Nlp + ?Sized>(
    problem: &P,
    guess: &[f64],
    lambda0: &[f64],
    opts: &SolverOptions,
) -> Result<NlpSolution> {
    let mut first = newton(problem, guess, lambda0, opts)?;
    if first.converged() {
        return Ok(first);
    }
    for &a in opts.restart_perturbations.iter().filter(|a| **a != 0.0) {
        let x: Vec<f64> = guess
            .iter()
            .enumerate()
            .map(|(i, &x)| x + a * x.abs().max(1.0) * (1.3 * (i + 1) as f64).sin())
            .collect();
        let l0 = match opts.least_squares_start {
            true => least_squares_multipliers(problem, &x, opts)?.unwrap_or_else(|| lambda0.to_vec()),
            false => lambda0.to_vec(),
        };
        log::info!("restarting from a guess perturbed by {a:.0e}");
        let mut sol = newton(problem, &x, &l0, opts)?;
        first.iterations += sol.iterations;
        if sol.converged() {
            sol.iterations = first.iterations;
            first.history.append(&mut sol.history);
            sol.history = first.history;
            return Ok(sol);
        }
    }
    Ok(first)
}

fn newton<P: Nlp + ?Sized>(
    problem: &P,
    guess: &[f64],
    lambda0: &[f64],
    opts: &SolverOptions,
) -> Result<NlpSolution> {
    let n = problem.n_vars();
    let m = problem.n_cons();
    if guess.len() != n || lambda0.len() != m {
        return Err(crate::Error::InvalidInput(format!(
            "guess has {} primal and {} dual entries, problem needs {n} and {m}",
            guess.len(),
            lambda0.len()
        )));
    }
    let mut pt = Point::eval(problem, guess.to_vec(), lambda0.to_vec())?;
    let mut history = vec![pt.residual()];
    let mut best = (pt.residual(), pt.x.clone(), pt.lambda.clone());
    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;
    let mut perm: Option<Vec<usize>> = None;
    let mut last_dw = 0.0;
    let mut rho = inf_norm(&pt.lambda).max(1.0);

    while pt.residual() > opts.tol {
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;
        let h = problem.hessian(&pt.x, &pt.lambda)?;
        let jac = problem.jacobian(&pt.x)?;
        let rhs: Vec<f64> = pt.grad_l.iter().chain(&pt.c).map(|v| -v).collect();
        let k0 = assemble_kkt(&h, &jac, n, m);
        let order = perm.get_or_insert_with(|| reverse_cuthill_mckee(n + m, &k0.entries));

        let merit0 = pt.merit();
        let g = problem.gradient(&pt.x)?;
        let mut reg = Regularization::new(last_dw);
        let mut accepted: Option<(Point, f64)> = None;
        let mut factored = false;
        while let Some((dw, dc)) = reg.current(opts) {
            let kd = if dw == 0.0 && dc == 0.0 { k0.clone() } else { regularized(&k0, n, m, dw, dc) };
            match block_inertia(&kd, order, opts.pivot_tol) {
                Some(i) if i.zero > 0 && dc == 0.0 => {
                    reg.singular();
                    continue;
                }
                Some(i) if i.positive == n && i.negative == m && i.zero == 0 => {}
                _ => {
                    reg.increase();
                    continue;
                }
            }
            let lu = match BandLu::factor(&kd, order, opts.pivot_tol) {
                Ok(lu) => lu,
                Err(_) => {
                    reg.singular();
                    continue;
                }
            };
            factored = true;
            let d = solve_refined(&lu, &kd, &rhs, opts.refinement_rounds);
            if d.iter().any(|v| !v.is_finite()) {
                reg.increase();
                continue;
            }
            let dx = &d[..n];
            let lam_next = pt.lambda.iter().zip(&d[n..]).map(|(l, dl)| (l + dl).abs()).fold(0.0, f64::max);
            rho = rho.max(1.1 * lam_next);
            let slope = dot(&g, dx) + rho * l1_slope(&pt.c, &jac.mul_vec(dx));
            let penalty = Penalty { rho, phi0: problem.objective(&pt.x)? + rho * l1(&pt.c), slope };
            if let Some((trial, step)) = line_search(problem, &pt, &d, merit0, &penalty, opts)? {
                accepted = Some((trial, step));
                log::debug!(
                    "iter {iterations:3}  kkt {:.3e}  step {step:.3e}  dw {dw:.1e}  dc {dc:.1e}",
                    accepted.as_ref().unwrap().0.residual()
                );
                last_dw = dw;
                break;
            }
            reg.increase();
        }
        match accepted {
            Some((trial, _)) => pt = trial,
            None => {
                status = if factored { SolveStatus::LineSearchFailure } else { SolveStatus::SingularSystem };
                log::debug!("iter {iterations:3}  stopped: {status}");
                break;
            }
        }
        history.push(pt.residual());
        if pt.residual() < best.0 {
            best = (pt.residual(), pt.x.clone(), pt.lambda.clone());
        }
    }
    if pt.residual() <= opts.tol {
        status = SolveStatus::Converged;
        best = (pt.residual(), pt.x.clone(), pt.lambda.clone());
    }
    let (_, x, lambda) = best;
    let (stationarity, feasibility) = kkt_residual(problem, &x, &lambda)?;
    let objective = problem.objective(&x)?;
    log::info!(
        "solver {status} after {iterations} iterations, kkt {:.3e}",
        stationarity.max(feasibility)
    );
    Ok(NlpSolution {
        primal: x,
        multipliers: lambda,
        kkt_residual: stationarity.max(feasibility),
        stationarity,
        feasibility,
        objective,
        iterations,
        status,
        history,
    })
}

/// `ℓ1` penalty merit `f + ρ‖c‖₁` at the current point and its slope along
/// the step.
struct Penalty {
    rho: f64,
    phi0: f64,
    slope: f64,
}

fn l1(c: &[f64]) -> f64 {
    c.iter().map(|v| v.abs()).sum()
}

/// Directional derivative of `‖c‖₁` along `J dx`.
fn l1_slope(c: &[f64], jd: &[f64]) -> f64 {
    c.iter()
        .zip(jd)
        .map(|(&ci, &di)| if ci > 0.0 { di } else if ci < 0.0 { -di } else { di.abs() })
        .sum()
}

/// Backtracking line search. A step is accepted when it gives Armijo decrease
/// of `‖KKT‖²` or of the penalty merit, or, near the rounding floor, when the
/// full step does not increase the infinity-norm residual.
fn line_search<P: Nlp + ?Sized>(
    problem: &P,
    pt: &Point,
    d: &[f64],
    merit0: f64,
    penalty: &Penalty,
    opts: &SolverOptions,
) -> Result<Option<(Point, f64)>> {
    let n = pt.x.len();
    let mut step = 1.0;
    let r0 = pt.residual();
    while step >= opts.min_step {
        let x: Vec<f64> = pt.x.iter().zip(&d[..n]).map(|(x, dx)| x + step * dx).collect();
        let lambda: Vec<f64> = pt.lambda.iter().zip(&d[n..]).map(|(l, dl)| l + step * dl).collect();
        let trial = Point::eval(problem, x, lambda)?;
        if trial.finite() {
            if trial.merit() <= (1.0 - 2.0 * opts.armijo * step) * merit0 {
                return Ok(Some((trial, step)));
            }
            if penalty.slope < 0.0 {
                let phi = problem.objective(&trial.x)? + penalty.rho * l1(&trial.c);
                if phi.is_finite() && phi <= penalty.phi0 + opts.armijo * step * penalty.slope {
                    return Ok(Some((trial, step)));
                }
            }
            if step == 1.0 && r0 <= 1e3 * opts.tol && trial.residual() <= r0 {
                return Ok(Some((trial, step)));
            }
        }
        step *= 0.5;
    }
    Ok(None)
}

/// Primal shift `δ_w` and dual shift `δ_c` of the KKT matrix. `δ_w` starts at
/// zero; when raised it resumes from a third of the last accepted value and
/// grows by 8 (100 from a cold start). `δ_c` switches on at the first
/// singular factorization.
struct Regularization {
    dw: f64,
    dc: f64,
    last: f64,
    dead: bool,
}

impl Regularization {
    fn new(last: f64) -> Self {
        Self { dw: 0.0, dc: 0.0, last, dead: false }
    }

    fn current(&self, opts: &SolverOptions) -> Option<(f64, f64)> {
        (!self.dead && self.dw <= opts.reg_max).then_some((self.dw, self.dc))
    }

    fn singular(&mut self) {
        if self.dc == 0.0 {
            self.dc = DUAL_SHIFT;
        } else {
            self.increase();
        }
    }

    fn increase(&mut self) {
        self.dw = if self.dw == 0.0 {
            if self.last == 0.0 { PRIMAL_SHIFT_START } else { (self.last / 3.0).max(1e-20) }
        } else if self.last == 0.0 {
            self.dw * 100.0
        } else {
            self.dw * 8.0
        };
        if !self.dw.is_finite() {
            self.dead = true;
        }
    }
}

/// `[I Jᵀ; J -εI]` with `ε` scaled to `J`.
fn augmented(jac: &Triplets, n: usize, m: usize) -> Triplets {
    let mut eye = Triplets::new(n, n);
    for i in 0..n {
        eye.push(i, i, 1.0);
    }
    let mut k = assemble_kkt(&eye, jac, n, m);
    let eps = 1e-10 * jac.max_abs().max(1.0).powi(2);
    for i in 0..m {
        k.push(n + i, n + i, -eps);
    }
    k
}

const PRIMAL_SHIFT_START: f64 = 1e-4;
const DUAL_SHIFT: f64 = 1e-8;

fn regularized(k0: &Triplets, n: usize, m: usize, dw: f64, dc: f64) -> Triplets {
    let mut k = k0.clone();
    if dw > 0.0 {
        for i in 0..n {
            k.push(i, i, dw);
        }
    }
    if dc > 0.0 {
        for i in 0..m {
            k.push(n + i, n + i, -dc);
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Result;

    /// min (x - 3)² s.t. x - y = 0
    struct Q1;
    impl Nlp for Q1 {
        fn n_vars(&self) -> usize {
            2
        }
        fn n_cons(&self) -> usize {
            1
        }
        fn objective(&self, x: &[f64]) -> Result<f64> {
            Ok((x[0] - 3.0).powi(2))
        }
        fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![2.0 * (x[0] - 3.0), 0.0])
        }
        fn constraints(&self, x: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![x[0] - x[1]])
        }
        fn jacobian(&self, _: &[f64]) -> Result<Triplets> {
            let mut t = Triplets::new(1, 2);
            t.push(0, 0, 1.0);
            t.push(0, 1, -1.0);
            Ok(t)
        }
    }

    #[test]
    fn trivial_quadratic() {
        let s = solve(&Q1, &[0.0, 5.0], &SolverOptions::with_tol(1e-12)).unwrap();
        assert!(s.converged());
        assert!((s.primal[0] - 3.0).abs() < 1e-10 && (s.primal[1] - 3.0).abs() < 1e-10);
        assert!(s.multipliers[0].abs() < 1e-10);
    }

    #[test]
    fn residual_at_zero_multipliers_is_gradient() {
        let (st, fe) = kkt_residual(&Q1, &[1.0, 1.0], &[0.0]).unwrap();
        assert_eq!(st, 4.0);
        assert_eq!(fe, 0.0);
    }

    #[test]
    fn rejects_bad_guess_length() {
        assert!(solve(&Q1, &[0.0], &SolverOptions::default()).is_err());
    }

    #[test]
    fn max_iterations_returns_best() {
        let opts = SolverOptions { max_iter: 0, ..SolverOptions::with_tol(1e-12) };
        let s = solve(&Q1, &[0.0, 5.0], &opts).unwrap();
        assert_eq!(s.status, SolveStatus::MaxIterations);
        assert_eq!(s.primal, vec![0.0, 5.0]);
    }
}
