//! Finite algebraic system for the coefficients `(c_0, …, c_K, a)` and its
//! three solution routes: a linear eigenproblem at `p = 1`, a normalized
//! fixed-point iteration for `p < 1`, and damped Newton with continuation
//! in `p` for `p > 1`.
//!
//! With `t = 2r²-1` the projected equations read
//!
//! ```text
//! c_k = a/(2^s Q_k) ∫ (1+t)^{N/2-1} (u(t) - C)_+^p P_k(t) dt,   k = 0..K
//! 1   = u(0) - u(1)
//! ```
//!
//! where `u - C = Σ λ_n c_n (P_n(t) - P_n(1))`. That polynomial vanishes at
//! `t = 1`, so we write it as `(1-t) q(t)` and integrate `q_+^p` against the
//! Gauss–Jacobi weight `(1-t)^p (1+t)^{N/2-1}`; the endpoint singularity of
//! the integrand is then carried by the rule instead of the nodes.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Unconverged};
use crate::groundstate::GroundStateSolution;
use crate::riesz_basis::{BasisParams, BasisTables, SpectralCoefficients};
use crate::specfun::{gauss_jacobi_rule, QuadratureRule};

pub const DEFAULT_TRUNC: usize = 64;
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-10;
pub const DEFAULT_DP: f64 = 0.1;
pub const DEFAULT_FIXED_POINT_ITERS: usize = 500;
pub const DEFAULT_NEWTON_ITERS: usize = 50;
const MAX_STEP_HALVINGS: usize = 20;
const MIN_DP_FRACTION: f64 = 1.0 / 16.0;
/// Relative negativity of ρ at quadrature nodes still accepted as a ground state.
/// Truncation ripple near the boundary reaches a few 1e-4 for K <= 8, while
/// the excited eigenvectors dip to about -0.3.
const EIGEN_POSITIVITY_SLACK: f64 = 1e-2;

/// Support radius and oscillation `u(0) - u(R)` the equations are posed with.
///
/// In frame `(R, O)` the coefficients describe `u(r) = R^{2s} U(r/R)`, where
/// `U` is the unit-ball expansion, and the coefficient rows of the residual
/// are divided by `O / R^{2s}`. Members of the scaling family then have the
/// same residual as the solve they were derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub radius: f64,
    pub oscillation: f64,
}

impl Default for Frame {
    fn default() -> Self {
        Self {
            radius: 1.0,
            oscillation: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub basis: BasisParams,
    pub p: f64,
    /// Reject `p >= (N+2s)/(N-2s)` at construction.
    pub enforce_subcritical: bool,
    pub residual_tol: f64,
    pub max_iter: Option<usize>,
    pub dp: f64,
    pub quad_order: Option<usize>,
    pub frame: Frame,
}

impl ProblemParams {
    pub fn new(basis: BasisParams, p: f64) -> Result<Self> {
        let params = Self {
            basis,
            p,
            enforce_subcritical: true,
            residual_tol: DEFAULT_RESIDUAL_TOL,
            max_iter: None,
            dp: DEFAULT_DP,
            quad_order: None,
            frame: Frame::default(),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        crate::riesz_basis::validate_dim_order(self.basis.dim, self.basis.s)?;
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Err(Error::domain(format!(
                "exponent p must be positive, got {}",
                self.p
            )));
        }
        if !(self.dp > 0.0) || !(self.residual_tol > 0.0) {
            return Err(Error::domain("dp and residual_tol must be positive"));
        }
        if !(self.frame.radius > 0.0 && self.frame.oscillation > 0.0) {
            return Err(Error::domain(
                "frame radius and oscillation must be positive",
            ));
        }
        if matches!(self.quad_order, Some(0)) || matches!(self.max_iter, Some(0)) {
            return Err(Error::domain("quad_order and max_iter must be positive"));
        }
        if self.enforce_subcritical && self.p >= 1.0 {
            check_subcritical(&self.basis, self.p)?;
        }
        Ok(())
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
            .unwrap_or_else(|| (2 * self.basis.trunc + 32).max(64))
    }

    pub fn max_iter(&self) -> usize {
        self.max_iter.unwrap_or(if self.p < 1.0 {
            DEFAULT_FIXED_POINT_ITERS
        } else {
            DEFAULT_NEWTON_ITERS
        })
    }

    pub fn with_p(&self, p: f64) -> Self {
        Self { p, ..*self }
    }

    pub fn with_trunc(&self, trunc: usize) -> Self {
        Self {
            basis: self.basis.with_trunc(trunc),
            ..*self
        }
    }
}

pub(crate) fn check_subcritical(basis: &BasisParams, p: f64) -> Result<()> {
    let crit = basis.critical_exponent();
    if p >= crit {
        return Err(Error::regime(format!(
            "p = {p} violates p < (N+2s)/(N-2s) = {crit}; no compactly supported ground state exists"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    pub final_residual_inf: f64,
    pub tail_ratio: f64,
    /// `(p, residual)` after each accepted continuation step.
    pub continuation_path: Vec<(f64, f64)>,
    pub converged: bool,
    /// ∞-norm residual at every iterate of the last inner solve.
    #[serde(default)]
    pub residual_history: Vec<f64>,
}

/// Quadrature tables for one `(basis, p, quad_order)` combination.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub tables: BasisTables,
    pub rule: QuadratureRule,
    pub p: f64,
    /// `P_n(t_j)`, nodes × coefficients.
    pub jacobi: DMatrix<f64>,
    /// `λ_n (P_n(t_j) - P_n(1)) / (1 - t_j)`, nodes × coefficients.
    pub reduced: DMatrix<f64>,
    /// `w_j P_k(t_j) / (2^s Q_k)`, coefficients × nodes.
    pub projector: DMatrix<f64>,
    pub osc_row: DVector<f64>,
}

impl Discretization {
    pub fn new(basis: &BasisParams, p: f64, quad_order: usize) -> Result<Self> {
        let tables = BasisTables::new(basis);
        let rule = gauss_jacobi_rule(p, basis.beta(), quad_order)?;
        let n_nodes = rule.len();
        let n_coef = basis.len();
        let mut jacobi = DMatrix::zeros(n_nodes, n_coef);
        let mut reduced = DMatrix::zeros(n_nodes, n_coef);
        let mut projector = DMatrix::zeros(n_coef, n_nodes);
        let two_s = 2f64.powf(basis.s);
        for (j, (&t, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
            let vals = tables.jacobi(t);
            for n in 0..n_coef {
                jacobi[(j, n)] = vals[n];
                reduced[(j, n)] = tables.lambda[n] * (vals[n] - tables.p_one[n]) / (1.0 - t);
                projector[(n, j)] = w * vals[n] / (two_s * tables.q[n]);
            }
        }
        let osc_row = DVector::from_vec(tables.oscillation_row());
        Ok(Self {
            tables,
            rule,
            p,
            jacobi,
            reduced,
            projector,
            osc_row,
        })
    }

    pub fn for_params(params: &ProblemParams) -> Result<Self> {
        Self::new(&params.basis, params.p, params.quad_order())
    }

    fn n_coef(&self) -> usize {
        self.tables.params.len()
    }

    /// `q(t_j)` with `u - C = (1-t) q`.
    fn reduced_values(&self, c: &DVector<f64>) -> Result<DVector<f64>> {
        let q = &self.reduced * c;
        if let Some(node) = q.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric {
                node,
                context: "u - C at quadrature nodes",
            });
        }
        Ok(q)
    }

    fn positive_power(&self, q: &DVector<f64>) -> DVector<f64> {
        q.map(|v| if v > 0.0 { v.powf(self.p) } else { 0.0 })
    }

    /// Projection `F(c, a)` at unit amplitude scale: returns `Pw · q_+^p`.
    fn projection(&self, c: &DVector<f64>) -> Result<DVector<f64>> {
        let q = self.reduced_values(c)?;
        let g = self.positive_power(&q);
        let f = &self.projector * g;
        if let Some(node) = f.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric {
                node,
                context: "projection integral",
            });
        }
        Ok(f)
    }

    /// `a R^{2sp}` multiplying the projection in frame `frame`.
    fn amplitude_scale(&self, a: f64, frame: &Frame) -> f64 {
        a * frame.radius.powf(2.0 * self.tables.params.s * self.p)
    }

    pub fn residual(&self, frame: &Frame, coeffs: &SpectralCoefficients) -> Result<DVector<f64>> {
        let n_coef = self.n_coef();
        if coeffs.c.len() != n_coef {
            return Err(Error::domain(format!(
                "expected {} coefficients, got {}",
                n_coef,
                coeffs.c.len()
            )));
        }
        let c = DVector::from_column_slice(&coeffs.c);
        let f = self.projection(&c)? * self.amplitude_scale(coeffs.a, frame);
        let r2s = frame.radius.powf(2.0 * self.tables.params.s);
        let coef_scale = frame.oscillation / r2s;
        let mut out = DVector::zeros(n_coef + 1);
        for k in 0..n_coef {
            out[k] = (c[k] - f[k]) / coef_scale;
        }
        let osc = r2s * self.osc_row.dot(&c);
        out[n_coef] = 1.0 - osc / frame.oscillation;
        Ok(out)
    }

    pub fn jacobian(&self, frame: &Frame, coeffs: &SpectralCoefficients) -> Result<DMatrix<f64>> {
        if self.p < 1.0 {
            return Err(Error::domain(
                "analytic Jacobian requires p >= 1; use the fixed-point route for p < 1",
            ));
        }
        let n_coef = self.n_coef();
        let c = DVector::from_column_slice(&coeffs.c);
        let q = self.reduced_values(&c)?;
        let scale = self.amplitude_scale(coeffs.a, frame);
        let p = self.p;
        let deriv = q.map(|v| if v > 0.0 { p * v.powf(p - 1.0) } else { 0.0 });
        let mut weighted = self.reduced.clone();
        for (j, d) in deriv.iter().enumerate() {
            weighted.row_mut(j).scale_mut(*d);
        }
        let block = &self.projector * weighted;
        let f = &self.projector * self.positive_power(&q);

        let r2s = frame.radius.powf(2.0 * self.tables.params.s);
        let inv_coef = r2s / frame.oscillation;
        let mut jac = DMatrix::zeros(n_coef + 1, n_coef + 1);
        for k in 0..n_coef {
            for n in 0..n_coef {
                let delta = if k == n { 1.0 } else { 0.0 };
                jac[(k, n)] = (delta - scale * block[(k, n)]) * inv_coef;
            }
            jac[(k, n_coef)] = -scale / coeffs.a * f[k] * inv_coef;
        }
        for n in 0..n_coef {
            jac[(n_coef, n)] = -r2s * self.osc_row[n] / frame.oscillation;
        }
        Ok(jac)
    }

    /// `A_{kn} = (1/(2^s Q_k)) ∫ (1+t)^{N/2-1} λ_n (P_n(t) - P_n(1)) P_k(t) dt`.
    ///
    /// Exact for `p = 1`, where the integrand is a polynomial.
    pub fn linear_operator(&self) -> DMatrix<f64> {
        &self.projector * &self.reduced
    }

    /// `Σ c_n P_n(t_j)`, proportional to ρ at the nodes.
    fn density_sums(&self, c: &DVector<f64>) -> DVector<f64> {
        &self.jacobi * c
    }
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// `G(c, a)`: entries `0..=K` are `c_k - F_k`, entry `K+1` the normalization defect.
pub fn residual_system(params: &ProblemParams, coeffs: &SpectralCoefficients) -> Result<Vec<f64>> {
    let disc = Discretization::for_params(params)?;
    Ok(disc
        .residual(&params.frame, coeffs)?
        .iter()
        .copied()
        .collect())
}

/// Analytic Jacobian of [`residual_system`] with respect to `(c_0..c_K, a)`.
pub fn jacobian_system(
    params: &ProblemParams,
    coeffs: &SpectralCoefficients,
) -> Result<DMatrix<f64>> {
    let disc = Discretization::for_params(params)?;
    disc.jacobian(&params.frame, coeffs)
}

fn diagnostics_for(
    coeffs: &SpectralCoefficients,
    iterations: usize,
    residual: f64,
    history: Vec<f64>,
    tol: f64,
) -> SolveDiagnostics {
    SolveDiagnostics {
        iterations,
        final_residual_inf: residual,
        tail_ratio: coeffs.tail_ratio(),
        continuation_path: Vec::new(),
        converged: residual <= tol,
        residual_history: history,
    }
}

fn unconverged(
    message: String,
    coeffs: SpectralCoefficients,
    diagnostics: SolveDiagnostics,
) -> Error {
    Error::NonConvergence {
        message,
        last: Box::new(Unconverged {
            coeffs,
            diagnostics,
        }),
    }
}

/// Ground state at `p = 1` from the eigenproblem `A c = (1/a) c`.
///
/// Real eigenvalues are scanned from the largest down; the first whose
/// eigenvector gives a nonnegative density at every node is taken.
pub fn solve_eigen_p1(params: &ProblemParams) -> Result<(SpectralCoefficients, SolveDiagnostics)> {
    if params.p != 1.0 {
        return Err(Error::domain(format!(
            "eigen solve requires p = 1, got {}",
            params.p
        )));
    }
    let disc = Discretization::for_params(params)?;
    let a_mat = disc.linear_operator();
    let n = a_mat.nrows();

    let mut candidates: Vec<f64> = a_mat
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.re > 0.0 && z.im.abs() <= 1e-10 * z.re.abs().max(1e-300))
        .map(|z| z.re)
        .collect();
    candidates.sort_by(|x, y| y.partial_cmp(x).unwrap());

    let frame = params.frame;
    let r2s = frame.radius.powf(2.0 * params.basis.s);
    for lam in candidates {
        let shifted = &a_mat - DMatrix::identity(n, n) * lam;
        let svd = shifted.svd(false, true);
        let v_t = match svd.v_t {
            Some(v) => v,
            None => continue,
        };
        let (imin, _) =
            svd.singular_values
                .iter()
                .enumerate()
                .fold(
                    (0, f64::INFINITY),
                    |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc },
                );
        let mut c: DVector<f64> = v_t.row(imin).transpose();
        let osc = r2s * disc.osc_row.dot(&c);
        if osc.abs() < 1e-300 {
            continue;
        }
        c *= frame.oscillation / osc;
        let rho = disc.density_sums(&c);
        let rho_max = inf_norm(&rho);
        if rho.iter().all(|&v| v >= -EIGEN_POSITIVITY_SLACK * rho_max) {
            let coeffs = SpectralCoefficients::new(c.iter().copied().collect(), 1.0 / (lam * r2s))?;
            let res = inf_norm(&disc.residual(&frame, &coeffs)?);
            let diag = diagnostics_for(&coeffs, 1, res, vec![res], params.residual_tol);
            if !diag.converged {
                return Err(unconverged(
                    format!("eigenvector residual {res:.3e} exceeds tolerance"),
                    coeffs,
                    diag,
                ));
            }
            return Ok((coeffs, diag));
        }
    }
    Err(Error::NoGroundState(
        "no real eigenpair with a nonnegative density".into(),
    ))
}

/// Starting point of the fixed-point iteration: only `c_1` nonzero, with the
/// sign that makes the oscillation positive, and `a = 1`.
pub fn fixed_point_initial_guess(params: &ProblemParams) -> SpectralCoefficients {
    let mut c = vec![0.0; params.basis.len()];
    if c.len() > 1 {
        // P_1 increases with t, so u decreases in r only for c_1 < 0
        c[1] = -1.0;
    } else {
        c[0] = 1.0;
    }
    SpectralCoefficients { c, a: 1.0 }
}

/// Fixed-point iteration `c ← F(c, a)` for `0 < p < 1`, with `a` rescaled each
/// sweep so that the new iterate satisfies the oscillation normalization.
pub fn solve_fixed_point(
    params: &ProblemParams,
) -> Result<(SpectralCoefficients, SolveDiagnostics)> {
    if !(params.p > 0.0 && params.p < 1.0) {
        return Err(Error::domain(format!(
            "fixed-point route requires 0 < p < 1, got {}",
            params.p
        )));
    }
    let disc = Discretization::for_params(params)?;
    let frame = params.frame;
    let r2s = frame.radius.powf(2.0 * params.basis.s);
    let mut coeffs = fixed_point_initial_guess(params);
    if params.basis.trunc == 0 {
        return Err(Error::domain("fixed-point route needs K >= 1"));
    }
    let mut history = Vec::new();
    let max_iter = params.max_iter();
    for iter in 0..=max_iter {
        let res = inf_norm(&disc.residual(&frame, &coeffs)?);
        history.push(res);
        if res <= params.residual_tol {
            let diag = diagnostics_for(&coeffs, iter, res, history, params.residual_tol);
            return Ok((coeffs, diag));
        }
        if iter == max_iter {
            break;
        }
        let c = DVector::from_column_slice(&coeffs.c);
        let trial = disc.projection(&c)? * disc.amplitude_scale(coeffs.a, &frame);
        let osc = r2s * disc.osc_row.dot(&trial) / frame.oscillation;
        if !(osc > 0.0) || !osc.is_finite() {
            let diag = diagnostics_for(&coeffs, iter, res, history, params.residual_tol);
            return Err(unconverged(
                format!("oscillation collapsed to {osc:e} at iteration {iter}"),
                coeffs,
                diag,
            ));
        }
        coeffs = SpectralCoefficients {
            c: (trial / osc).iter().copied().collect(),
            a: coeffs.a / osc,
        };
    }
    let res = *history.last().unwrap();
    let diag = diagnostics_for(&coeffs, max_iter, res, history, params.residual_tol);
    Err(unconverged(
        format!("fixed-point iteration stopped at residual {res:.3e} after {max_iter} iterations"),
        coeffs,
        diag,
    ))
}

fn pack(coeffs: &SpectralCoefficients) -> DVector<f64> {
    let mut x = DVector::zeros(coeffs.c.len() + 1);
    for (i, v) in coeffs.c.iter().enumerate() {
        x[i] = *v;
    }
    x[coeffs.c.len()] = coeffs.a;
    x
}

fn unpack(x: &DVector<f64>) -> SpectralCoefficients {
    let n = x.len() - 1;
    SpectralCoefficients {
        c: x.rows(0, n).iter().copied().collect(),
        a: x[n],
    }
}

/// Damped Newton iteration on `G(c, a) = 0` for `p >= 1`.
pub fn solve_newton(
    params: &ProblemParams,
    init: &SpectralCoefficients,
) -> Result<(SpectralCoefficients, SolveDiagnostics)> {
    if params.p < 1.0 {
        return Err(Error::domain(format!(
            "Newton route requires p >= 1, got {}",
            params.p
        )));
    }
    if init.c.len() != params.basis.len() {
        return Err(Error::domain("initial guess has the wrong length"));
    }
    let disc = Discretization::for_params(params)?;
    let frame = params.frame;
    let mut coeffs = init.clone();
    let mut r = disc.residual(&frame, &coeffs)?;
    let mut history = vec![inf_norm(&r)];
    let max_iter = params.max_iter();

    for iter in 0..max_iter {
        let res = inf_norm(&r);
        if res <= params.residual_tol {
            let diag = diagnostics_for(&coeffs, iter, res, history, params.residual_tol);
            return Ok((coeffs, diag));
        }
        let jac = disc.jacobian(&frame, &coeffs)?;
        let step = jac
            .lu()
            .solve(&r)
            .ok_or_else(|| Error::LinearSolve(format!("singular Jacobian at iteration {iter}")))?;
        let x = pack(&coeffs);
        let merit = r.norm();
        let mut damping = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_STEP_HALVINGS {
            let trial = unpack(&(&x - &step * damping));
            if trial.a > 0.0 {
                if let Ok(r_trial) = disc.residual(&frame, &trial) {
                    if r_trial.norm() < merit {
                        accepted = Some((trial, r_trial));
                        break;
                    }
                }
            }
            damping *= 0.5;
        }
        match accepted {
            Some((next, r_next)) => {
                coeffs = next;
                r = r_next;
                history.push(inf_norm(&r));
            }
            None => {
                let diag = diagnostics_for(&coeffs, iter, res, history, params.residual_tol);
                return Err(unconverged(
                    format!("line search failed at iteration {iter}, residual {res:.3e}"),
                    coeffs,
                    diag,
                ));
            }
        }
    }
    let res = inf_norm(&r);
    let diag = diagnostics_for(&coeffs, max_iter, res, history, params.residual_tol);
    if diag.converged {
        return Ok((coeffs, diag));
    }
    Err(unconverged(
        format!("Newton stopped at residual {res:.3e} after {max_iter} iterations"),
        coeffs,
        diag,
    ))
}

/// Continuation in `p` from the `p = 1` eigen solution up to `p_target`.
///
/// Steps by `dp`, clipping the last step onto `p_target`. A failed Newton
/// solve halves the step, down to `dp/16`, before giving up.
pub fn solve_continuation(
    params: &ProblemParams,
    p_target: f64,
) -> Result<(GroundStateSolution, SolveDiagnostics)> {
    if !(p_target >= 1.0) {
        return Err(Error::domain(format!(
            "continuation targets p >= 1, got {p_target}"
        )));
    }
    check_subcritical(&params.basis, p_target)?;
    let base = params.with_p(1.0);
    let (mut coeffs, first) = solve_eigen_p1(&base)?;
    let mut path = vec![(1.0, first.final_residual_inf)];
    let mut iterations = first.iterations;
    let mut last = first;
    let mut p_cur = 1.0;
    let mut step = params.dp;
    let min_step = params.dp * MIN_DP_FRACTION;

    while p_cur < p_target {
        let p_next = if p_cur + step >= p_target - 1e-12 {
            p_target
        } else {
            p_cur + step
        };
        match solve_newton(&params.with_p(p_next), &coeffs) {
            Ok((next, diag)) => {
                iterations += diag.iterations;
                path.push((p_next, diag.final_residual_inf));
                coeffs = next;
                last = diag;
                p_cur = p_next;
                step = (step * 2.0).min(params.dp);
            }
            Err(err) => {
                step *= 0.5;
                if step < min_step * (1.0 - 1e-12) {
                    let mut diag = last.clone();
                    diag.continuation_path = path;
                    diag.converged = false;
                    return Err(unconverged(
                        format!(
                            "continuation stalled at p = {p_cur} on the way to {p_target}: {err}"
                        ),
                        coeffs,
                        diag,
                    ));
                }
            }
        }
    }

    let diagnostics = SolveDiagnostics {
        iterations,
        final_residual_inf: last.final_residual_inf,
        tail_ratio: coeffs.tail_ratio(),
        continuation_path: path,
        converged: last.converged,
        residual_history: last.residual_history,
    };
    let solution =
        GroundStateSolution::from_solve(params.with_p(p_target), coeffs, diagnostics.clone())?;
    Ok((solution, diagnostics))
}

/// Solve by the route appropriate to `params.p`.
pub fn solve(params: &ProblemParams) -> Result<GroundStateSolution> {
    params.validate()?;
    if params.p < 1.0 {
        let (coeffs, diag) = solve_fixed_point(params)?;
        GroundStateSolution::from_solve(*params, coeffs, diag)
    } else {
        let (solution, _) = solve_continuation(params, params.p)?;
        Ok(solution)
    }
}
