//! Closed-form Riesz potentials of the weighted Jacobi basis
//! `(1-|x|²)^{-s} P_n^{(-s, N/2-1)}(2|x|²-1)` on the unit ball.
//!
//! Inside the ball the potential of the `n`-th basis function is
//! `λ_n P_n(2r²-1)`; outside it is
//! `λ_n μ_n r^{-N-2n+2s} ₂F₁(1-s+n, N/2+n-s; 1+2n+N/2-s; r^{-2})`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{beta_fn, hyp2f1, jacobi_all, ln_gamma};

/// Dimension `N`, fractional order `s` and truncation `K` of the expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisParams {
    pub dim: usize,
    pub s: f64,
    pub trunc: usize,
}

impl BasisParams {
    pub fn new(dim: usize, s: f64, trunc: usize) -> Result<Self> {
        validate_dim_order(dim, s)?;
        Ok(Self { dim, s, trunc })
    }

    /// First Jacobi parameter, `-s`.
    pub fn alpha(&self) -> f64 {
        -self.s
    }

    /// Second Jacobi parameter, `N/2 - 1`.
    pub fn beta(&self) -> f64 {
        self.half_dim() - 1.0
    }

    pub fn half_dim(&self) -> f64 {
        self.dim as f64 / 2.0
    }

    pub fn len(&self) -> usize {
        self.trunc + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Critical exponent `(N+2s)/(N-2s)`; infinite when `N = 2s` cannot occur.
    pub fn critical_exponent(&self) -> f64 {
        let n = self.dim as f64;
        (n + 2.0 * self.s) / (n - 2.0 * self.s)
    }

    pub fn with_trunc(&self, trunc: usize) -> Self {
        Self { trunc, ..*self }
    }
}

pub(crate) fn validate_dim_order(dim: usize, s: f64) -> Result<()> {
    if dim == 0 {
        return Err(Error::domain("dimension must be at least 1"));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::domain(format!(
            "order s must lie in (0, 1), got {s}"
        )));
    }
    if dim == 1 && s >= 0.5 {
        return Err(Error::domain(format!(
            "s < 1/2 is required when N = 1, got s = {s}"
        )));
    }
    if !(dim as f64 / 2.0 - s > 0.0) {
        return Err(Error::domain("N/2 - s must be positive"));
    }
    Ok(())
}

/// Expansion coefficients `c_0..c_K` of `ρ` and the amplitude `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCoefficients {
    pub c: Vec<f64>,
    pub a: f64,
}

impl SpectralCoefficients {
    pub fn new(c: Vec<f64>, a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::domain(format!(
                "amplitude a must be positive, got {a}"
            )));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("coefficients must be finite"));
        }
        Ok(Self { c, a })
    }

    pub fn zeros(len: usize, a: f64) -> Self {
        Self {
            c: vec![0.0; len],
            a,
        }
    }

    /// `|c_K| / max_n |c_n|`, zero for the zero vector.
    pub fn tail_ratio(&self) -> f64 {
        let max = self.c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        match self.c.last() {
            Some(last) if max > 0.0 => last.abs() / max,
            _ => 0.0,
        }
    }
}

fn check_len(params: &BasisParams, coeffs: &SpectralCoefficients) -> Result<()> {
    if coeffs.c.len() != params.len() {
        return Err(Error::domain(format!(
            "expected {} coefficients, got {}",
            params.len(),
            coeffs.c.len()
        )));
    }
    Ok(())
}

fn ln_factorial(n: usize) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

fn lg(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `λ_n = 2^{-2s} Γ(1+n-s) Γ(N/2-s+n) / (n! Γ(N/2+n))`.
pub fn lambda_n(params: &BasisParams, n: usize) -> f64 {
    let s = params.s;
    let h = params.half_dim();
    let nf = n as f64;
    (-2.0 * s * std::f64::consts::LN_2 + lg(1.0 + nf - s) + lg(h - s + nf)
        - ln_factorial(n)
        - lg(h + nf))
    .exp()
}

/// `μ_n = sin(sπ)/π · B(1+n-s, N/2+n)`.
pub fn mu_n(params: &BasisParams, n: usize) -> f64 {
    let s = params.s;
    let nf = n as f64;
    let b = beta_fn(1.0 + nf - s, params.half_dim() + nf).expect("positive beta arguments");
    (s * PI).sin() / PI * b
}

/// `Q_k = ∫ (1-t)^{-s} (1+t)^{N/2-1} P_k(t)² dt`, in closed form.
pub fn q_k(params: &BasisParams, k: usize) -> f64 {
    let s = params.s;
    let h = params.half_dim();
    let kf = k as f64;
    let log =
        (h - s) * std::f64::consts::LN_2 - (2.0 * kf + h - s).ln() + lg(kf + 1.0 - s) + lg(kf + h)
            - ln_factorial(k)
            - lg(kf + h - s);
    log.exp()
}

/// `P_n^{(-s, N/2-1)}(-1) = (-1)^n Γ(N/2+n) / (n! Γ(N/2))`.
fn jacobi_at_minus_one(params: &BasisParams, n: usize) -> f64 {
    let h = params.half_dim();
    let mag = (lg(h + n as f64) - ln_factorial(n) - lg(h)).exp();
    if n.is_multiple_of(2) {
        mag
    } else {
        -mag
    }
}

fn jacobi_at_one(params: &BasisParams, n: usize) -> f64 {
    let a = params.alpha();
    (lg(1.0 + a + n as f64) - ln_factorial(n) - lg(1.0 + a)).exp()
}

/// Per-index constants of a basis, computed once.
#[derive(Debug, Clone)]
pub struct BasisTables {
    pub params: BasisParams,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub q: Vec<f64>,
    pub p_one: Vec<f64>,
    pub p_minus_one: Vec<f64>,
}

impl BasisTables {
    pub fn new(params: &BasisParams) -> Self {
        let n = params.len();
        Self {
            params: *params,
            lambda: (0..n).map(|i| lambda_n(params, i)).collect(),
            mu: (0..n).map(|i| mu_n(params, i)).collect(),
            q: (0..n).map(|i| q_k(params, i)).collect(),
            p_one: (0..n).map(|i| jacobi_at_one(params, i)).collect(),
            p_minus_one: (0..n).map(|i| jacobi_at_minus_one(params, i)).collect(),
        }
    }

    /// Jacobi values `P_0(t)..P_K(t)` for this basis.
    pub fn jacobi(&self, t: f64) -> Vec<f64> {
        jacobi_all(
            self.params.trunc,
            self.params.alpha(),
            self.params.beta(),
            t,
        )
    }

    /// Gradient of `u(0) - u(1)` with respect to the coefficients.
    pub fn oscillation_row(&self) -> Vec<f64> {
        self.lambda
            .iter()
            .zip(self.p_minus_one.iter().zip(&self.p_one))
            .map(|(l, (m, o))| l * (m - o))
            .collect()
    }
}

/// `u(r) = Σ λ_n c_n P_n(2r²-1)` for `0 <= r <= 1`.
pub fn u_inside(params: &BasisParams, coeffs: &SpectralCoefficients, r: f64) -> Result<f64> {
    check_len(params, coeffs)?;
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::domain(format!(
            "u_inside needs r in [0, 1], got {r}"
        )));
    }
    let p = jacobi_all(
        params.trunc,
        params.alpha(),
        params.beta(),
        2.0 * r * r - 1.0,
    );
    Ok((0..params.len())
        .map(|n| lambda_n(params, n) * coeffs.c[n] * p[n])
        .sum())
}

/// Exterior potential for `r > 1`.
pub fn u_outside(params: &BasisParams, coeffs: &SpectralCoefficients, r: f64) -> Result<f64> {
    check_len(params, coeffs)?;
    if !(r > 1.0) || !r.is_finite() {
        return Err(Error::domain(format!("u_outside needs r > 1, got {r}")));
    }
    let s = params.s;
    let h = params.half_dim();
    let n_dim = params.dim as f64;
    let z = 1.0 / (r * r);
    let mut total = 0.0;
    for (n, &c) in coeffs.c.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let nf = n as f64;
        let decay = (-(n_dim + 2.0 * nf - 2.0 * s) * r.ln()).exp();
        if decay == 0.0 {
            break;
        }
        let f = hyp2f1(1.0 - s + nf, h + nf - s, 1.0 + 2.0 * nf + h - s, z)?;
        total += lambda_n(params, n) * mu_n(params, n) * c * decay * f;
    }
    Ok(total)
}

/// `ρ(r) = (1-r²)^{-s} Σ c_n P_n(2r²-1)` inside the ball, zero for `r >= 1`.
pub fn rho_eval(params: &BasisParams, coeffs: &SpectralCoefficients, r: f64) -> Result<f64> {
    check_len(params, coeffs)?;
    if !(r >= 0.0) {
        return Err(Error::domain(format!("rho_eval needs r >= 0, got {r}")));
    }
    if r >= 1.0 {
        return Ok(0.0);
    }
    let p = jacobi_all(
        params.trunc,
        params.alpha(),
        params.beta(),
        2.0 * r * r - 1.0,
    );
    let sum: f64 = coeffs.c.iter().zip(&p).map(|(c, p)| c * p).sum();
    Ok((1.0 - r * r).powf(-params.s) * sum)
}

/// `C = u(1) = Σ λ_n c_n P_n(1)`.
pub fn boundary_multiplier(params: &BasisParams, coeffs: &SpectralCoefficients) -> Result<f64> {
    check_len(params, coeffs)?;
    Ok((0..params.len())
        .map(|n| lambda_n(params, n) * coeffs.c[n] * jacobi_at_one(params, n))
        .sum())
}

/// `u(0) - u(1)`.
pub fn oscillation(params: &BasisParams, coeffs: &SpectralCoefficients) -> Result<f64> {
    check_len(params, coeffs)?;
    let tables = BasisTables::new(params);
    Ok(tables
        .oscillation_row()
        .iter()
        .zip(&coeffs.c)
        .map(|(g, c)| g * c)
        .sum())
}

/// `∫_{B_1} (1-|x|²)^{-s} dx = (N ω_N / 2) B(N/2, 1-s)`.
pub fn weight_integral(params: &BasisParams) -> f64 {
    let h = params.half_dim();
    let sphere = 2.0 * (h * PI.ln() - lg(h)).exp();
    0.5 * sphere * beta_fn(h, 1.0 - params.s).expect("positive beta arguments")
}

/// Total mass `∫ ρ`; only `c_0` contributes by orthogonality.
pub fn mass(params: &BasisParams, coeffs: &SpectralCoefficients) -> Result<f64> {
    check_len(params, coeffs)?;
    Ok(coeffs.c[0] * weight_integral(params))
}

/// Riesz kernel constant `c_{N,s} = Γ(N/2-s) / (π^{N/2} 4^s Γ(s))`.
pub fn riesz_kernel_constant(dim: usize, s: f64) -> Result<f64> {
    if dim == 0 || !(s > 0.0 && s < 1.0) {
        return Err(Error::domain(format!("invalid (N, s) = ({dim}, {s})")));
    }
    let h = dim as f64 / 2.0;
    let log = ln_gamma(h - s)? - h * PI.ln() - s * 4f64.ln() - ln_gamma(s)?;
    Ok(log.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{gauss_jacobi_rule, hyp2f1_at_one};
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn basis(dim: usize, s: f64, trunc: usize) -> BasisParams {
        BasisParams::new(dim, s, trunc).unwrap()
    }

    fn unit(len: usize, idx: usize) -> SpectralCoefficients {
        let mut c = vec![0.0; len];
        c[idx] = 1.0;
        SpectralCoefficients::new(c, 1.0).unwrap()
    }

    fn gamma(x: f64) -> f64 {
        libm::tgamma(x)
    }

    #[test]
    fn params_validation() {
        assert!(BasisParams::new(1, 0.6, 4).is_err());
        assert!(BasisParams::new(1, 0.5, 4).is_err());
        assert!(BasisParams::new(1, 0.45, 4).is_ok());
        assert!(BasisParams::new(2, 0.0, 4).is_err());
        assert!(BasisParams::new(2, 1.0, 4).is_err());
        assert!(BasisParams::new(0, 0.5, 4).is_err());
        assert!(SpectralCoefficients::new(vec![1.0], 0.0).is_err());
    }

    #[test]
    fn lambda_values() {
        let b = basis(2, 0.5, 4);
        assert!(rel(lambda_n(&b, 0), PI / 2.0) < 1e-14);
        let b3 = basis(3, 0.25, 4);
        let oracle = 2f64.powf(-0.5) * gamma(0.75) * gamma(1.25) / gamma(1.5);
        assert!(rel(lambda_n(&b3, 0), oracle) < 1e-13);
        assert!((oracle - 0.8862).abs() < 1e-3);
    }

    #[test]
    fn lambda_decay_trend() {
        let b = basis(2, 0.5, 0);
        let mut prev = lambda_n(&b, 1);
        for n in 2..400 {
            let l = lambda_n(&b, n);
            assert!(l < prev);
            prev = l;
        }
        // λ_n n^{2s} → 2^{-2s} (Stirling)
        let n = 5000;
        assert!((lambda_n(&b, n) * (n as f64) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn mu_values() {
        let b = basis(2, 0.5, 4);
        assert!(rel(mu_n(&b, 0), 2.0 / PI) < 1e-14);
        let b3 = basis(3, 0.25, 4);
        let oracle = (PI / 4.0).sin() / PI * gamma(1.75) * gamma(2.5) / gamma(4.25);
        assert!(rel(mu_n(&b3, 1), oracle) < 1e-13);
    }

    proptest! {
        #[test]
        fn mu_reflection_identity(dim in 1usize..5, s in 0.01f64..0.99, n in 0usize..60) {
            prop_assume!(dim > 1 || s < 0.5);
            let b = basis(dim, s, 0);
            let h = dim as f64 / 2.0;
            let nf = n as f64;
            let log = lg(s) + lg(1.0 - s) + lg(1.0 + 2.0 * nf + h - s) - lg(1.0 + nf - s) - lg(h + nf);
            let v = mu_n(&b, n) * log.exp();
            prop_assert!((v - 1.0).abs() < 1e-11);
        }

        #[test]
        fn far_field_matches_mass(dim in 1usize..4, s in 0.05f64..0.95, c0 in 0.1f64..3.0, c1 in -1.0f64..1.0) {
            prop_assume!(dim > 1 || s < 0.5);
            let b = basis(dim, s, 1);
            let coeffs = SpectralCoefficients::new(vec![c0, c1], 1.0).unwrap();
            let m = mass(&b, &coeffs).unwrap();
            let k = riesz_kernel_constant(dim, s).unwrap();
            let lead = lambda_n(&b, 0) * mu_n(&b, 0) * c0;
            prop_assert!(rel(m * k, lead) < 1e-10);
            let r: f64 = 50.0;
            let far = r.powf(dim as f64 - 2.0 * s) * u_outside(&b, &coeffs, r).unwrap();
            prop_assert!(rel(far, lead) < 1e-3);
        }
    }

    #[test]
    fn q_values_and_quadrature() {
        let b = basis(2, 0.5, 0);
        assert!(rel(q_k(&b, 0), 2.0 * 2f64.sqrt()) < 1e-14);
        assert!(rel(q_k(&b, 1), 2f64.sqrt() / 2.5) < 1e-14);
        for &(dim, s) in &[(1usize, 0.3), (2, 0.5), (3, 0.25), (4, 0.75)] {
            let b = basis(dim, s, 30);
            let rule = gauss_jacobi_rule(b.alpha(), b.beta(), 64).unwrap();
            let tables = BasisTables::new(&b);
            for k in 0..=30 {
                let quad = rule.integrate(|t| tables.jacobi(t)[k].powi(2));
                assert!(rel(quad, q_k(&b, k)) < 1e-10, "({dim},{s}) k={k}");
            }
        }
    }

    #[test]
    fn interior_values() {
        let b = basis(2, 0.5, 3);
        let zero = SpectralCoefficients::zeros(4, 1.0);
        for &r in &[0.0, 0.3, 1.0] {
            assert_eq!(u_inside(&b, &zero, r).unwrap(), 0.0);
            assert!((u_inside(&b, &unit(4, 0), r).unwrap() - lambda_n(&b, 0)).abs() < 1e-15);
        }
        assert!((u_inside(&b, &unit(4, 1), 0.0).unwrap() + lambda_n(&b, 1)).abs() < 1e-14);
        assert!(u_inside(&b, &zero, 1.1).is_err());
        assert!(u_inside(&b, &SpectralCoefficients::zeros(3, 1.0), 0.1).is_err());
    }

    #[test]
    fn exterior_values() {
        let b = basis(2, 0.5, 3);
        let zero = SpectralCoefficients::zeros(4, 1.0);
        assert_eq!(u_outside(&b, &zero, 2.0).unwrap(), 0.0);
        assert!(u_outside(&b, &zero, 1.0).is_err());
        let c0 = unit(4, 0);
        // r^{N-2s} u → λ_0 μ_0 = 1
        let r: f64 = 1e4;
        assert!((r * u_outside(&b, &c0, r).unwrap() - 1.0).abs() < 1e-7);
        // continuity with the interior value π/2 as r → 1⁺ (slow one-sided approach)
        let near = u_outside(&b, &c0, 1.0 + 1e-4).unwrap();
        assert!((near - PI / 2.0).abs() < 2e-2, "{near}");
        let farther = u_outside(&b, &c0, 1.0 + 1e-3).unwrap();
        assert!((near - PI / 2.0).abs() < (farther - PI / 2.0).abs());
    }

    #[test]
    fn boundary_continuity_identity() {
        for &(dim, s) in &[(1usize, 0.2), (2, 0.5), (3, 0.25), (3, 0.75)] {
            let b = basis(dim, s, 64);
            let t = BasisTables::new(&b);
            let h = b.half_dim();
            for n in 0..=64 {
                let nf = n as f64;
                let f1 = hyp2f1_at_one(1.0 - s + nf, h + nf - s, 1.0 + 2.0 * nf + h - s).unwrap();
                let lhs = t.lambda[n] * t.p_one[n];
                let rhs = t.lambda[n] * t.mu[n] * f1;
                assert!(rel(rhs, lhs) < 1e-10, "({dim},{s}) n={n}");
            }
        }
    }

    #[test]
    fn rho_values() {
        let b = basis(2, 0.5, 2);
        assert_eq!(
            rho_eval(&b, &SpectralCoefficients::zeros(3, 1.0), 0.4).unwrap(),
            0.0
        );
        assert!((rho_eval(&b, &unit(3, 0), 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((rho_eval(&b, &unit(3, 0), 0.6).unwrap() - 1.25).abs() < 1e-14);
        assert_eq!(rho_eval(&b, &unit(3, 0), 1.0).unwrap(), 0.0);
        assert_eq!(rho_eval(&b, &unit(3, 0), 2.0).unwrap(), 0.0);
    }

    #[test]
    fn multiplier_and_mass() {
        let b = basis(2, 0.5, 5);
        assert_eq!(
            boundary_multiplier(&b, &SpectralCoefficients::zeros(6, 1.0)).unwrap(),
            0.0
        );
        assert!((boundary_multiplier(&b, &unit(6, 0)).unwrap() - PI / 2.0).abs() < 1e-14);
        let coeffs =
            SpectralCoefficients::new(vec![0.3, -0.2, 0.1, 0.05, -0.01, 0.002], 1.0).unwrap();
        let c = boundary_multiplier(&b, &coeffs).unwrap();
        assert!((c - u_inside(&b, &coeffs, 1.0).unwrap()).abs() < 1e-12);

        let mut other = coeffs.clone();
        other.c[0] = 0.0;
        assert_eq!(mass(&b, &other).unwrap(), 0.0);
        assert!((mass(&b, &unit(6, 0)).unwrap() - 2.0 * PI).abs() < 1e-13);
        let k = riesz_kernel_constant(2, 0.5).unwrap();
        assert!((mass(&b, &unit(6, 0)).unwrap() * k - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mass_matches_direct_quadrature() {
        for &(dim, s) in &[(1usize, 0.3), (2, 0.5), (3, 0.25)] {
            let b = basis(dim, s, 6);
            let coeffs =
                SpectralCoefficients::new(vec![0.7, -0.4, 0.2, 0.1, -0.05, 0.02, 0.01], 1.0)
                    .unwrap();
            let rule = gauss_jacobi_rule(b.alpha(), b.beta(), 32).unwrap();
            let tables = BasisTables::new(&b);
            let h = b.half_dim();
            let sphere = 2.0 * PI.powf(h) / gamma(h);
            let factor = sphere * 2f64.powf(s + 1.0 - h) / 4.0;
            let direct = factor
                * rule.integrate(|t| {
                    tables
                        .jacobi(t)
                        .iter()
                        .zip(&coeffs.c)
                        .map(|(p, c)| p * c)
                        .sum::<f64>()
                });
            assert!(rel(direct, mass(&b, &coeffs).unwrap()) < 1e-8);
        }
    }

    #[test]
    fn kernel_constant_values() {
        assert!(
            rel(
                riesz_kernel_constant(3, 0.5).unwrap(),
                1.0 / (2.0 * PI * PI)
            ) < 1e-13
        );
        assert!(rel(riesz_kernel_constant(2, 0.5).unwrap(), 1.0 / (2.0 * PI)) < 1e-13);
        for dim in 1..6 {
            for &s in &[0.1, 0.3, 0.45] {
                let k = riesz_kernel_constant(dim, s).unwrap();
                assert!(k > 0.0 && k.is_finite());
            }
        }
    }

    #[test]
    fn constants_positive_on_grid() {
        for &(dim, s) in &[
            (1usize, 0.1),
            (1, 0.45),
            (2, 0.25),
            (2, 0.9),
            (3, 0.5),
            (5, 0.99),
        ] {
            let b = basis(dim, s, 200);
            let t = BasisTables::new(&b);
            for n in 0..=200 {
                assert!(t.lambda[n] > 0.0 && t.mu[n] > 0.0 && t.q[n] > 0.0);
            }
        }
    }

    #[test]
    fn tail_ratio() {
        let c = SpectralCoefficients::new(vec![2.0, -1.0, 1e-3], 1.0).unwrap();
        assert!((c.tail_ratio() - 5e-4).abs() < 1e-18);
        assert_eq!(SpectralCoefficients::zeros(3, 1.0).tail_ratio(), 0.0);
    }
}
