//! Special functions used by the Jacobi spectral method: log-gamma and beta,
//! Jacobi polynomials, Gauss–Jacobi quadrature and the Gauss hypergeometric
//! series on `[0, 1)`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Natural logarithm of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    Ok(libm::lgamma(x))
}

/// Euler beta function `B(p, q) = Γ(p)Γ(q)/Γ(p+q)`, evaluated in log space.
pub fn beta_fn(p: f64, q: f64) -> Result<f64> {
    Ok(ln_beta(p, q)?.exp())
}

pub(crate) fn ln_beta(p: f64, q: f64) -> Result<f64> {
    if !(p > 0.0 && q > 0.0) {
        return Err(Error::domain(format!(
            "beta requires positive arguments, got ({p}, {q})"
        )));
    }
    Ok(ln_gamma(p)? + ln_gamma(q)? - ln_gamma(p + q)?)
}

fn check_jacobi_params(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > -1.0 && beta > -1.0) {
        return Err(Error::domain(format!(
            "Jacobi parameters must exceed -1, got ({alpha}, {beta})"
        )));
    }
    Ok(())
}

/// Coefficients of `P_{n+1} = (A t + B) P_n - C P_{n-1}` for `n >= 1`.
#[inline]
fn recurrence(n: usize, alpha: f64, beta: f64) -> (f64, f64, f64) {
    let n = n as f64;
    let ab = alpha + beta;
    let two_n_ab = 2.0 * n + ab;
    let denom = 2.0 * (n + 1.0) * (n + ab + 1.0) * two_n_ab;
    let a = (two_n_ab + 1.0) * (two_n_ab + 2.0) * two_n_ab / denom;
    let b = (two_n_ab + 1.0) * (alpha * alpha - beta * beta) / denom;
    let c = 2.0 * (n + alpha) * (n + beta) * (two_n_ab + 2.0) / denom;
    (a, b, c)
}

/// Values `P_0(t), …, P_{n_max}(t)` of the Jacobi polynomials `P_n^{(alpha,beta)}`.
pub fn jacobi_all(n_max: usize, alpha: f64, beta: f64, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(1.0);
    if n_max == 0 {
        return out;
    }
    out.push(0.5 * (alpha - beta) + 0.5 * (alpha + beta + 2.0) * t);
    for n in 1..n_max {
        let (a, b, c) = recurrence(n, alpha, beta);
        let next = (a * t + b) * out[n] - c * out[n - 1];
        out.push(next);
    }
    out
}

/// Jacobi polynomial `P_n^{(alpha,beta)}(t)` by the three-term recurrence.
pub fn jacobi_p(n: usize, alpha: f64, beta: f64, t: f64) -> Result<f64> {
    check_jacobi_params(alpha, beta)?;
    if !(-1.0..=1.0).contains(&t) {
        return Err(Error::domain(format!(
            "Jacobi argument must lie in [-1, 1], got {t}"
        )));
    }
    Ok(jacobi_all(n, alpha, beta, t)[n])
}

/// `P_n^{(alpha,·)}(1) = Γ(1+alpha+n) / (n! Γ(1+alpha))`.
pub fn jacobi_at_one(n: usize, alpha: f64) -> Result<f64> {
    if !(alpha > -1.0) {
        return Err(Error::domain(format!("alpha must exceed -1, got {alpha}")));
    }
    let nf = n as f64;
    Ok((ln_gamma(1.0 + alpha + nf)? - ln_gamma(nf + 1.0)? - ln_gamma(1.0 + alpha)?).exp())
}

/// A Gauss–Jacobi rule for `∫_{-1}^{1} f(t) (1-t)^alpha (1+t)^beta dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub alpha: f64,
    pub beta: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub order: usize,
}

impl QuadratureRule {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Diagonal and off-diagonal entries of the Jacobi matrix of the
/// orthonormal Jacobi polynomials, plus the total weight mass.
fn jacobi_matrix(alpha: f64, beta: f64, order: usize) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let ab = alpha + beta;
    let mut diag = Vec::with_capacity(order);
    for k in 0..order {
        let kf = k as f64;
        let d = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        diag.push(d);
    }
    let mut off = Vec::with_capacity(order.saturating_sub(1));
    for k in 1..order {
        let kf = k as f64;
        let b2 = if k == 1 {
            // (n+ab)/(2n+ab-1) cancels at n = 1
            4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
        } else {
            let t = 2.0 * kf + ab;
            4.0 * kf * (kf + alpha) * (kf + beta) * (kf + ab) / (t * t * (t + 1.0) * (t - 1.0))
        };
        off.push(b2.sqrt());
    }
    let mass = ((ab + 1.0) * std::f64::consts::LN_2 + ln_beta(alpha + 1.0, beta + 1.0)?).exp();
    Ok((diag, off, mass))
}

/// Orthonormal polynomial values at `x`: returns (p_order(x), p'_order(x), Σ_{k<order} p_k(x)²).
fn orthonormal_eval(diag: &[f64], off: &[f64], mass: f64, x: f64) -> (f64, f64, f64) {
    let order = diag.len();
    let mut p_prev = 0.0;
    let mut dp_prev = 0.0;
    let mut p = 1.0 / mass.sqrt();
    let mut dp = 0.0;
    let mut sum_sq = 0.0;
    for k in 0..order {
        sum_sq += p * p;
        let b_prev = if k == 0 { 0.0 } else { off[k - 1] };
        // b_k is the coupling between p_k and p_{k+1}; the last one is only a scale
        let b_next = if k + 1 < order { off[k] } else { 1.0 };
        let p_next = ((x - diag[k]) * p - b_prev * p_prev) / b_next;
        let dp_next = (p + (x - diag[k]) * dp - b_prev * dp_prev) / b_next;
        p_prev = p;
        dp_prev = dp;
        p = p_next;
        dp = dp_next;
    }
    (p, dp, sum_sq)
}

/// Gauss–Jacobi rule of the given order by Golub–Welsch, with nodes polished
/// by Newton's method and weights taken from the Christoffel function.
pub fn gauss_jacobi_rule(alpha: f64, beta: f64, order: usize) -> Result<QuadratureRule> {
    check_jacobi_params(alpha, beta)?;
    if order == 0 {
        return Err(Error::domain("quadrature order must be at least 1"));
    }
    let (diag, off, mass) = jacobi_matrix(alpha, beta, order)?;
    let mut jm = DMatrix::<f64>::zeros(order, order);
    for k in 0..order {
        jm[(k, k)] = diag[k];
        if k + 1 < order {
            jm[(k, k + 1)] = off[k];
            jm[(k + 1, k)] = off[k];
        }
    }
    let eig = SymmetricEigen::new(jm);
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut weights = Vec::with_capacity(order);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, dp, _) = orthonormal_eval(&diag, &off, mass, *x);
            if dp == 0.0 {
                break;
            }
            let step = p / dp;
            *x -= step;
            if step.abs() < 1e-17 {
                break;
            }
        }
        let (_, _, sum_sq) = orthonormal_eval(&diag, &off, mass, *x);
        weights.push(1.0 / sum_sq);
    }

    let ordered = nodes.windows(2).all(|w| w[0] < w[1]);
    let inside = nodes.iter().all(|&t| t > -1.0 && t < 1.0);
    if !ordered || !inside || weights.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::domain(format!(
            "Gauss–Jacobi rule of order {order} with ({alpha}, {beta}) lost node separation"
        )));
    }

    Ok(QuadratureRule {
        alpha,
        beta,
        nodes,
        weights,
        order,
    })
}

const HYP_EPS: f64 = 1e-16;
const HYP_TERMS_NEAR_ZERO: usize = 5_000;
const HYP_TERMS_NEAR_ONE: usize = 400_000;

/// Gauss hypergeometric function `₂F₁(a, b; c; z)` for real `0 <= z < 1`.
///
/// Summed directly. Once the term ratio has settled below one, the remaining
/// tail is bounded by a geometric series, which terminates the sum; for
/// `z > 0.9` this takes O(1/(1-z)) terms.
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if c <= 0.0 && c.fract() == 0.0 {
        return Err(Error::domain(format!(
            "c must not be a nonpositive integer, got {c}"
        )));
    }
    if !(0.0..1.0).contains(&z) {
        return Err(Error::domain(format!(
            "hyp2f1 requires 0 <= z < 1, got {z}"
        )));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    let max_terms = if z > 0.9 {
        HYP_TERMS_NEAR_ONE
    } else {
        HYP_TERMS_NEAR_ZERO
    };
    let mut sum = 1.0;
    let mut term = 1.0;
    for k in 0..max_terms {
        let kf = k as f64;
        let ratio = (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * z;
        term *= ratio;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        let q = ratio.abs().max(z);
        if q < 1.0 && kf > (a + b - c).abs() + 1.0 {
            let tail = term.abs() * q / (1.0 - q);
            if tail <= HYP_EPS * sum.abs() {
                return Ok(sum);
            }
        }
    }
    Err(Error::domain(format!(
        "hyp2f1({a}, {b}; {c}; {z}) did not converge in {max_terms} terms"
    )))
}

/// Gauss summation `₂F₁(a, b; c; 1) = Γ(c)Γ(c-a-b) / (Γ(c-a)Γ(c-b))` for
/// positive `c`, `c-a`, `c-b` and `c-a-b`.
pub fn hyp2f1_at_one(a: f64, b: f64, c: f64) -> Result<f64> {
    if !(c > 0.0 && c - a > 0.0 && c - b > 0.0 && c - a - b > 0.0) {
        return Err(Error::domain(format!(
            "Gauss summation needs c, c-a, c-b, c-a-b > 0, got ({a}, {b}, {c})"
        )));
    }
    Ok((ln_gamma(c)? + ln_gamma(c - a - b)? - ln_gamma(c - a)? - ln_gamma(c - b)?).exp())
}
