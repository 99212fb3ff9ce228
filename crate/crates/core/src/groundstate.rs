//! Solutions and their exact transformations: the `(C, δ)` scaling family,
//! the far field, the supercritical decay constant, the critical bubble and
//! the correspondence with aggregation–diffusion steady states.
//!
//! A family member is stored in the frame of [`Frame`]: coefficients `c`
//! describe `u(r) = R^{2s} U(r/R)` with `U` the unit-ball expansion, so that
//! rescaling never touches the basis itself.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::riesz_basis::{self, riesz_kernel_constant, SpectralCoefficients};
use crate::solver::{Frame, ProblemParams, SolveDiagnostics};
use crate::specfun::ln_gamma;

/// Thresholds closer than this are treated as equal when classifying `m`.
const REGIME_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStateSolution {
    pub params: ProblemParams,
    pub coeffs: SpectralCoefficients,
    pub multiplier: f64,
    pub mass: f64,
    pub central_value: f64,
    pub support_radius: f64,
    pub diagnostics: SolveDiagnostics,
}

impl GroundStateSolution {
    /// Derive the physical quantities of `coeffs` in the frame of `params`.
    pub fn from_solve(
        params: ProblemParams,
        coeffs: SpectralCoefficients,
        diagnostics: SolveDiagnostics,
    ) -> Result<Self> {
        let basis = &params.basis;
        let radius = params.frame.radius;
        let r2s = radius.powf(2.0 * basis.s);
        let multiplier = r2s * riesz_basis::boundary_multiplier(basis, &coeffs)?;
        let central_value = r2s * riesz_basis::u_inside(basis, &coeffs, 0.0)?;
        let mass = radius.powi(basis.dim as i32) * riesz_basis::mass(basis, &coeffs)?;
        Ok(Self {
            params,
            coeffs,
            multiplier,
            mass,
            central_value,
            support_radius: radius,
            diagnostics,
        })
    }

    pub fn dim(&self) -> usize {
        self.params.basis.dim
    }

    pub fn s(&self) -> f64 {
        self.params.basis.s
    }

    pub fn p(&self) -> f64 {
        self.params.p
    }

    pub fn converged(&self) -> bool {
        self.diagnostics.converged
    }

    /// `u(r)` for any `r >= 0`, inside or outside the support.
    pub fn u(&self, r: f64) -> Result<f64> {
        let basis = &self.params.basis;
        let radius = self.support_radius;
        let y = r / radius;
        let unit = if y <= 1.0 {
            riesz_basis::u_inside(basis, &self.coeffs, y)?
        } else {
            riesz_basis::u_outside(basis, &self.coeffs, y)?
        };
        Ok(radius.powf(2.0 * basis.s) * unit)
    }

    /// `ρ(r) = (-Δ)^s u`, zero outside the support.
    pub fn rho(&self, r: f64) -> Result<f64> {
        riesz_basis::rho_eval(&self.params.basis, &self.coeffs, r / self.support_radius)
    }
}

/// The member `u_new(x) = κ u(δx)` with `κ = C_new / C`.
///
/// It solves the same equation with `a_new = κ^{1-p} δ^{2s} a`; the support
/// radius becomes `R/δ` and the mass `κ δ^{2s-N} M`.
pub fn rescale(sol: &GroundStateSolution, c_new: f64, delta: f64) -> Result<GroundStateSolution> {
    if !(c_new > 0.0 && c_new.is_finite()) || !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::domain(format!(
            "rescale needs positive C and delta, got ({c_new}, {delta})"
        )));
    }
    if !(sol.multiplier > 0.0) {
        return Err(Error::domain(
            "rescale needs a solution with positive multiplier",
        ));
    }
    let kappa = c_new / sol.multiplier;
    rescale_by(sol, kappa, delta)
}

fn rescale_by(sol: &GroundStateSolution, kappa: f64, delta: f64) -> Result<GroundStateSolution> {
    let s = sol.s();
    let p = sol.p();
    let coef_factor = kappa * delta.powf(2.0 * s);
    let coeffs = SpectralCoefficients {
        c: sol.coeffs.c.iter().map(|v| v * coef_factor).collect(),
        a: kappa.powf(1.0 - p) * delta.powf(2.0 * s) * sol.coeffs.a,
    };
    let mut params = sol.params;
    params.frame = Frame {
        radius: sol.params.frame.radius / delta,
        oscillation: kappa * sol.params.frame.oscillation,
    };
    let mut out = GroundStateSolution::from_solve(params, coeffs, sol.diagnostics.clone())?;
    // the identity member keeps its derived quantities bit for bit
    if kappa == 1.0 && delta == 1.0 {
        out.multiplier = sol.multiplier;
        out.mass = sol.mass;
        out.central_value = sol.central_value;
    }
    Ok(out)
}

/// Exact exterior value at `r` next to the surrogate `M c_{N,s} r^{2s-N}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FarField {
    pub exact: f64,
    pub surrogate: f64,
}

pub fn far_field(sol: &GroundStateSolution, r: f64) -> Result<FarField> {
    if !(r > sol.support_radius) {
        return Err(Error::domain(format!(
            "far field needs r > R = {}, got {r}",
            sol.support_radius
        )));
    }
    let exact = sol.u(r)?;
    let cns = riesz_kernel_constant(sol.dim(), sol.s())?;
    let surrogate = sol.mass * cns * r.powf(2.0 * sol.s() - sol.dim() as f64);
    Ok(FarField { exact, surrogate })
}

/// Decay constant of the slowly decaying supercritical solution
/// `u = c(N,s,p) |x|^{-2s/(p-1)}`.
pub fn supercritical_constant(dim: usize, s: f64, p: f64) -> Result<f64> {
    crate::riesz_basis::validate_dim_order(dim, s)?;
    let h = dim as f64 / 2.0;
    let crit = (h + s) / (h - s);
    if !(p > crit) {
        return Err(Error::regime(format!(
            "c(N,s,p) needs p > (N+2s)/(N-2s) = {crit}, got {p}"
        )));
    }
    let e = s / (p - 1.0);
    let ep = s * p / (p - 1.0);
    for arg in [h - e, ep, e, h - ep] {
        if !(arg > 0.0) {
            return Err(Error::domain(format!("nonpositive gamma argument {arg}")));
        }
    }
    let log = ln_gamma(h - e)? + ln_gamma(ep)?
        - ln_gamma(e)?
        - ln_gamma(h - ep)?
        - 2.0 * s * std::f64::consts::LN_2;
    let value = (log / (p - 1.0)).exp();
    if !value.is_finite() {
        return Err(Error::domain("c(N,s,p) overflowed"));
    }
    Ok(value)
}

/// `amplitude · (t / (t² + r²))^{(N-2s)/2}`, the critical-exponent family.
pub fn critical_bubble(dim: usize, s: f64, t: f64, r: f64, amplitude: f64) -> Result<f64> {
    crate::riesz_basis::validate_dim_order(dim, s)?;
    if !(t > 0.0) {
        return Err(Error::domain(format!(
            "bubble scale t must be positive, got {t}"
        )));
    }
    if !(r >= 0.0) {
        return Err(Error::domain(format!(
            "radius must be nonnegative, got {r}"
        )));
    }
    let exponent = (dim as f64 - 2.0 * s) / 2.0;
    Ok(amplitude * (t / (t * t + r * r)).powf(exponent))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    DiffusionDominated,
    FairCompetition,
    AggregationDominatedSubcritical,
    Critical,
    Supercritical,
}

pub fn fair_competition_exponent(dim: usize, s: f64) -> f64 {
    2.0 - 2.0 * s / dim as f64
}

pub fn critical_diffusion_exponent(dim: usize, s: f64) -> f64 {
    2.0 * dim as f64 / (dim as f64 + 2.0 * s)
}

pub fn classify_regime(dim: usize, s: f64, m: f64) -> Regime {
    let mc = fair_competition_exponent(dim, s);
    let mcrit = critical_diffusion_exponent(dim, s);
    if (m - mc).abs() <= REGIME_EPS {
        Regime::FairCompetition
    } else if m > mc {
        Regime::DiffusionDominated
    } else if (m - mcrit).abs() <= REGIME_EPS {
        Regime::Critical
    } else if m < mcrit {
        Regime::Supercritical
    } else {
        Regime::AggregationDominatedSubcritical
    }
}

/// How the support radius moves as the mass grows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusTrend {
    Increasing,
    Constant,
    Decreasing,
}

/// A ground state read as a steady state of the aggregation–diffusion
/// equation with diffusion exponent `m` and sensitivity `χ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateView {
    pub m: f64,
    pub chi: f64,
    pub multiplier_k: f64,
    pub mass: f64,
    pub regime: Regime,
    /// Family member solving `(-Δ)^s u = a_p (χu - 𝒦)_+^p`.
    pub solution: GroundStateSolution,
}

impl SteadyStateView {
    pub fn support_radius(&self) -> f64 {
        self.solution.support_radius
    }

    pub fn rho(&self, r: f64) -> Result<f64> {
        self.solution.rho(r)
    }

    /// `p = 1/(m-1)`.
    pub fn p(&self) -> f64 {
        1.0 / (self.m - 1.0)
    }
}

/// `a_p = (p+1)^{-p}`.
pub fn steady_state_amplitude(p: f64) -> f64 {
    (p + 1.0).powf(-p)
}

/// Rescale `sol` onto `(-Δ)^s u = a_p (χu - 𝒦)_+^p`.
///
/// The equation fixes `a = a_p χ^p`; the member is chosen by keeping `C` and
/// changing only the support radius, which works for every `p` including 1.
pub fn to_steady_state(sol: &GroundStateSolution, chi: f64) -> Result<SteadyStateView> {
    if !(chi > 0.0 && chi.is_finite()) {
        return Err(Error::domain(format!("chi must be positive, got {chi}")));
    }
    let p = sol.p();
    let s = sol.s();
    let target_a = steady_state_amplitude(p) * chi.powf(p);
    let delta = (target_a / sol.coeffs.a).powf(1.0 / (2.0 * s));
    let solution = rescale_by(sol, 1.0, delta)?;
    let m = (p + 1.0) / p;
    Ok(SteadyStateView {
        m,
        chi,
        multiplier_k: chi * solution.multiplier,
        mass: solution.mass,
        regime: classify_regime(sol.dim(), s, m),
        solution,
    })
}

/// Member of the family with the same `a` and mass `mass_target`.
///
/// With `κ^{1-p} δ^{2s} = 1` the mass scales as `κ^{e}` for
/// `e = ((m-2)N + 2s) / (2s(m-1))`, so `κ = (M/M_1)^{1/e}`.
pub fn rescale_to_mass(sol: &GroundStateSolution, mass_target: f64) -> Result<GroundStateSolution> {
    if !(mass_target > 0.0 && mass_target.is_finite()) || !(sol.mass > 0.0) {
        return Err(Error::domain(format!(
            "mass rescaling needs positive masses, got {} -> {mass_target}",
            sol.mass
        )));
    }
    let p = sol.p();
    let m = (p + 1.0) / p;
    let (kappa_exp, _) = mass_exponents(sol.dim(), sol.s(), m)?;
    let ratio = mass_target / sol.mass;
    let kappa = ratio.powf(kappa_exp);
    let delta = kappa.powf((p - 1.0) / (2.0 * sol.s()));
    rescale_by(sol, kappa, delta)
}

/// Exponents `(2s(m-1)/D, (m-2)/D)` with `D = (m-2)N + 2s` for the multiplier
/// and the support radius as functions of the mass.
pub fn mass_exponents(dim: usize, s: f64, m: f64) -> Result<(f64, f64)> {
    let denom = (m - 2.0) * dim as f64 + 2.0 * s;
    if classify_regime(dim, s, m) != Regime::DiffusionDominated || !(denom > 0.0) {
        return Err(Error::regime(format!(
            "mass scaling needs m > 2 - 2s/N = {}; at fair competition every steady state has the critical mass",
            fair_competition_exponent(dim, s)
        )));
    }
    Ok((2.0 * s * (m - 1.0) / denom, (m - 2.0) / denom))
}

pub fn radius_trend(m: f64) -> RadiusTrend {
    if m == 2.0 {
        RadiusTrend::Constant
    } else if m > 2.0 {
        RadiusTrend::Increasing
    } else {
        RadiusTrend::Decreasing
    }
}

/// Result of [`mass_scaling`]: the new view plus the factors applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassScaled {
    pub view: SteadyStateView,
    pub multiplier_factor: f64,
    pub radius_factor: f64,
    pub radius_trend: RadiusTrend,
}

/// Steady state of mass `mass_target` in the family of `reference`.
pub fn mass_scaling(reference: &SteadyStateView, mass_target: f64) -> Result<MassScaled> {
    let sol = &reference.solution;
    let (k_exp, r_exp) = mass_exponents(sol.dim(), sol.s(), reference.m)?;
    let solution = rescale_to_mass(sol, mass_target)?;
    let ratio = mass_target / reference.mass;
    let view = SteadyStateView {
        m: reference.m,
        chi: reference.chi,
        multiplier_k: reference.chi * solution.multiplier,
        mass: solution.mass,
        regime: reference.regime,
        solution,
    };
    Ok(MassScaled {
        view,
        multiplier_factor: ratio.powf(k_exp),
        radius_factor: ratio.powf(r_exp),
        radius_trend: radius_trend(reference.m),
    })
}
