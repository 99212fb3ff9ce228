//! On-disk formats: the versioned JSON solution record and the `r,u,rho` CSV.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use fracplasma::solver::{Frame, ProblemParams, SolveDiagnostics};
use fracplasma::{BasisParams, GroundStateSolution, SpectralCoefficients};
use serde::{Deserialize, Serialize};

use crate::Failure;

pub const SCHEMA: &str = "fracplasma/1";
/// Interior samples are not taken closer to the support boundary than this.
pub const BOUNDARY_GAP: f64 = 1e-6;

#[derive(Debug, Serialize, Deserialize)]
pub struct ParamsRecord {
    pub dim: usize,
    pub s: f64,
    pub p: f64,
    pub trunc: usize,
    pub tol: f64,
    pub dp: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub iterations: usize,
    pub residual_inf: f64,
    pub tail_ratio: f64,
    pub converged: bool,
    pub continuation_path: Vec<(f64, f64)>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub schema: String,
    pub params: ParamsRecord,
    pub coefficients: Vec<f64>,
    pub a: f64,
    #[serde(rename = "multiplier_C")]
    pub multiplier_c: f64,
    pub mass: f64,
    pub central_value: f64,
    pub support_radius: f64,
    /// Radius and oscillation the coefficients are posed in; unit by default.
    #[serde(default)]
    pub frame: Frame,
    pub diagnostics: DiagnosticsRecord,
}

impl SolutionRecord {
    pub fn from_solution(sol: &GroundStateSolution) -> Self {
        let p = &sol.params;
        let d = &sol.diagnostics;
        Self {
            schema: SCHEMA.into(),
            params: ParamsRecord {
                dim: p.basis.dim,
                s: p.basis.s,
                p: p.p,
                trunc: p.basis.trunc,
                tol: p.residual_tol,
                dp: p.dp,
            },
            coefficients: sol.coeffs.c.clone(),
            a: sol.coeffs.a,
            multiplier_c: sol.multiplier,
            mass: sol.mass,
            central_value: sol.central_value,
            support_radius: sol.support_radius,
            frame: p.frame,
            diagnostics: DiagnosticsRecord {
                iterations: d.iterations,
                residual_inf: d.final_residual_inf,
                tail_ratio: d.tail_ratio,
                converged: d.converged,
                continuation_path: d.continuation_path.clone(),
            },
        }
    }

    /// Rebuild the solution; derived quantities are recomputed from the
    /// coefficients rather than trusted.
    pub fn into_solution(self) -> Result<GroundStateSolution, Failure> {
        if self.schema != SCHEMA {
            return Err(Failure::Usage(format!(
                "unsupported schema {:?}, expected {SCHEMA:?}",
                self.schema
            )));
        }
        let pr = &self.params;
        let basis = BasisParams::new(pr.dim, pr.s, pr.trunc)?;
        let mut params = ProblemParams::new(basis, pr.p)?;
        params.residual_tol = pr.tol;
        params.dp = pr.dp;
        params.frame = self.frame;
        params.validate()?;
        if self.coefficients.len() != basis.len() {
            return Err(Failure::Usage(format!(
                "solution has {} coefficients but trunc = {} needs {}",
                self.coefficients.len(),
                pr.trunc,
                basis.len()
            )));
        }
        let coeffs = SpectralCoefficients::new(self.coefficients, self.a)?;
        let d = self.diagnostics;
        let diagnostics = SolveDiagnostics {
            iterations: d.iterations,
            final_residual_inf: d.residual_inf,
            tail_ratio: d.tail_ratio,
            continuation_path: d.continuation_path,
            converged: d.converged,
            residual_history: Vec::new(),
        };
        Ok(GroundStateSolution::from_solve(
            params,
            coeffs,
            diagnostics,
        )?)
    }
}

pub fn read_solution(path: &Path) -> Result<GroundStateSolution, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let record: SolutionRecord = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("malformed solution file {}: {e}", path.display())))?;
    record.into_solution()
}

pub fn solution_json(sol: &GroundStateSolution) -> String {
    let mut text = serde_json::to_string_pretty(&SolutionRecord::from_solution(sol))
        .expect("solution records serialize");
    text.push('\n');
    text
}

/// `n` radii spanning `[0, r_max]`. Samples inside the support but within
/// [`BOUNDARY_GAP`] of its edge are pulled back to `R(1 - gap)`.
pub fn sample_radii(n: usize, r_max: f64, support_radius: f64) -> Vec<f64> {
    let edge = support_radius * (1.0 - BOUNDARY_GAP);
    (0..n)
        .map(|i| {
            let r = if n > 1 {
                r_max * i as f64 / (n - 1) as f64
            } else {
                0.0
            };
            if r > edge && r <= support_radius {
                edge
            } else {
                r
            }
        })
        .collect()
}

pub fn profile_csv(sol: &GroundStateSolution, radii: &[f64]) -> Result<String, Failure> {
    let mut out = String::from("r,u,rho\n");
    for &r in radii {
        let u = sol.u(r)?;
        let rho = sol.rho(r)?;
        if !(u.is_finite() && rho.is_finite()) {
            return Err(Failure::Usage(format!(
                "non-finite profile value at r = {r}"
            )));
        }
        writeln!(out, "{},{},{}", num(r), num(u), num(rho)).unwrap();
    }
    Ok(out)
}

/// 17 significant digits, enough for a lossless round trip.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write via a temporary file in the target directory and rename into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| Failure::Usage(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Write to `path` when given, otherwise to stdout.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<(), Failure> {
    match path {
        Some(p) => write_atomic(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radii_span_and_clamp() {
        let r = sample_radii(400, 3.0, 1.0);
        assert_eq!(r.len(), 400);
        assert_eq!(r[0], 0.0);
        assert_eq!(*r.last().unwrap(), 3.0);
        assert!(r.iter().all(|&x| !(x > 1.0 - BOUNDARY_GAP && x <= 1.0)));
    }

    #[test]
    fn number_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.5), "5.0000000000000000e-1");
    }
}
