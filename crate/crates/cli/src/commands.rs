use std::fmt::Write as _;
use std::path::Path;

use fracplasma::groundstate::{
    critical_diffusion_exponent, fair_competition_exponent, rescale, rescale_to_mass,
    supercritical_constant,
};
use fracplasma::riesz_basis::{lambda_n, mu_n, q_k, riesz_kernel_constant};
use fracplasma::solver::{solve, ProblemParams};
use fracplasma::validation::{
    check_boundary_continuity, check_far_field_mass, check_orthogonality, check_pohozaev,
    check_scaling_consistency, CheckReport, UNDER_RESOLVED_TAIL,
};
use fracplasma::{BasisParams, Error, GroundStateSolution};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{Command, Format, NumericArgs, ProblemArgs, SamplingArgs, SourceArgs};
use crate::output::{emit, profile_csv, read_solution, sample_radii, solution_json, write_atomic};
use crate::Failure;

pub fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Solve { problem, out } => cmd_solve(&problem, out.as_deref()),
        Command::Sweep {
            dim,
            grid_s,
            grid_p,
            numerics,
            out,
            format,
            threads,
            sampling,
        } => cmd_sweep(
            dim, &grid_s, &grid_p, &numerics, &out, format, threads, &sampling,
        ),
        Command::Rescale {
            input,
            c_new,
            delta,
            mass,
            out,
        } => cmd_rescale(&input, c_new, delta, mass, out.as_deref()),
        Command::Profile {
            source,
            sampling,
            out,
        } => cmd_profile(&source, &sampling, out.as_deref()),
        Command::Validate {
            source,
            basis_only,
            probe_r,
            c_new,
            delta,
            out,
        } => cmd_validate(&source, basis_only, probe_r, c_new, delta, out.as_deref()),
        Command::Constants { dim, s, p, trunc } => cmd_constants(dim, s, p, trunc),
    }
}

fn problem_params(
    dim: usize,
    s: f64,
    p: f64,
    numerics: &NumericArgs,
) -> Result<ProblemParams, Failure> {
    let basis = BasisParams::new(dim, s, numerics.trunc)?;
    let mut params = ProblemParams::new(basis, p)?;
    params.residual_tol = numerics.tol;
    params.dp = numerics.dp;
    params.validate()?;
    Ok(params)
}

fn warn_if_under_resolved(sol: &GroundStateSolution) {
    let tail = sol.diagnostics.tail_ratio;
    if tail > UNDER_RESOLVED_TAIL {
        eprintln!(
            "warning: coefficient tail ratio {tail:.3e} exceeds {UNDER_RESOLVED_TAIL:e}; the solution is under-resolved, raise --trunc"
        );
    }
}

type Partial = Option<Box<GroundStateSolution>>;

/// Solve, handing back the last iterate on nonconvergence.
fn solve_or_last(params: &ProblemParams) -> Result<GroundStateSolution, (Failure, Partial)> {
    match solve(params) {
        Ok(sol) => Ok(sol),
        Err(Error::NonConvergence { message, last }) => {
            let last = *last;
            let partial = GroundStateSolution::from_solve(*params, last.coeffs, last.diagnostics)
                .ok()
                .map(Box::new);
            Err((Failure::NonConvergence(message), partial))
        }
        Err(e) => Err((e.into(), None)),
    }
}

fn cmd_solve(problem: &ProblemArgs, out: Option<&Path>) -> Result<(), Failure> {
    let params = problem_params(problem.dim, problem.s, problem.p, &problem.numerics)?;
    match solve_or_last(&params) {
        Ok(sol) => {
            warn_if_under_resolved(&sol);
            emit(out, &solution_json(&sol))
        }
        Err((failure, partial)) => {
            if let Some(sol) = partial {
                emit(out, &solution_json(&sol))?;
            }
            Err(failure)
        }
    }
}

#[derive(Serialize)]
struct SweepEntry {
    s: f64,
    p: f64,
    file: Option<String>,
    status: &'static str,
    message: Option<String>,
    residual_inf: Option<f64>,
    tail_ratio: Option<f64>,
}

#[derive(Serialize)]
struct SweepIndex {
    schema: &'static str,
    dim: usize,
    points: Vec<SweepEntry>,
}

fn sweep_point(
    dim: usize,
    s: f64,
    p: f64,
    numerics: &NumericArgs,
    dir: &Path,
    format: Format,
    sampling: &SamplingArgs,
) -> SweepEntry {
    let mut entry = SweepEntry {
        s,
        p,
        file: None,
        status: "error",
        message: None,
        residual_inf: None,
        tail_ratio: None,
    };
    let params = match problem_params(dim, s, p, numerics) {
        Ok(params) => params,
        Err(f) => {
            entry.message = Some(f.message().to_string());
            return entry;
        }
    };
    let (sol, failure) = match solve_or_last(&params) {
        Ok(sol) => (Some(sol), None),
        Err((failure, partial)) => (partial.map(|b| *b), Some(failure)),
    };
    entry.status = match (&sol, &failure) {
        (_, None) => "converged",
        (Some(_), Some(_)) => "nonconverged",
        (None, Some(_)) => "error",
    };
    entry.message = failure.map(|f| f.message().to_string());
    if let Some(sol) = sol {
        entry.residual_inf = Some(sol.diagnostics.final_residual_inf);
        entry.tail_ratio = Some(sol.diagnostics.tail_ratio);
        let (name, body) = match format {
            Format::Json => (format!("s{s}_p{p}.json"), Ok(solution_json(&sol))),
            Format::Csv => (
                format!("s{s}_p{p}.csv"),
                profile_csv(
                    &sol,
                    &sample_radii(sampling.points, sampling.r_max, sol.support_radius),
                ),
            ),
        };
        match body.and_then(|text| write_atomic(&dir.join(&name), &text)) {
            Ok(()) => entry.file = Some(name),
            Err(f) => {
                entry.status = "error";
                entry.message = Some(f.message().to_string());
            }
        }
    }
    entry
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    dim: usize,
    grid_s: &[f64],
    grid_p: &[f64],
    numerics: &NumericArgs,
    out: &Path,
    format: Format,
    threads: Option<usize>,
    sampling: &SamplingArgs,
) -> Result<(), Failure> {
    if grid_s.is_empty() || grid_p.is_empty() {
        return Err(Failure::Usage(
            "sweep needs a nonempty --grid-s and --grid-p".into(),
        ));
    }
    std::fs::create_dir_all(out)
        .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", out.display())))?;
    let grid: Vec<(f64, f64)> = grid_s
        .iter()
        .flat_map(|&s| grid_p.iter().map(move |&p| (s, p)))
        .collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Failure::Usage(format!("cannot start worker pool: {e}")))?;
    let points: Vec<SweepEntry> = pool.install(|| {
        grid.par_iter()
            .map(|&(s, p)| sweep_point(dim, s, p, numerics, out, format, sampling))
            .collect()
    });
    let failed = points.iter().filter(|e| e.status != "converged").count();
    let index = SweepIndex {
        schema: "fracplasma/sweep/1",
        dim,
        points,
    };
    let mut text = serde_json::to_string_pretty(&index).expect("sweep index serializes");
    text.push('\n');
    write_atomic(&out.join("index.json"), &text)?;
    if failed > 0 {
        return Err(Failure::NonConvergence(format!(
            "{failed} of {} grid points did not converge; see index.json",
            grid.len()
        )));
    }
    Ok(())
}

fn cmd_rescale(
    input: &Path,
    c_new: Option<f64>,
    delta: Option<f64>,
    mass: Option<f64>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let sol = read_solution(input)?;
    let member = match (c_new, delta, mass) {
        (None, None, Some(m)) => rescale_to_mass(&sol, m)?,
        (Some(c), Some(d), None) => rescale(&sol, c, d)?,
        _ => {
            return Err(Failure::Usage(
                "rescale needs either --C and --delta, or --mass".into(),
            ))
        }
    };
    emit(out, &solution_json(&member))
}

fn load_source(source: &SourceArgs) -> Result<GroundStateSolution, Failure> {
    if let Some(path) = &source.input {
        return read_solution(path);
    }
    match (source.dim, source.s, source.p) {
        (Some(dim), Some(s), Some(p)) => {
            let params = problem_params(dim, s, p, &source.numerics)?;
            let sol = solve_or_last(&params).map_err(|(f, _)| f)?;
            warn_if_under_resolved(&sol);
            Ok(sol)
        }
        _ => Err(Failure::Usage(
            "give --input or all of --dim, --s and --p".into(),
        )),
    }
}

fn cmd_profile(
    source: &SourceArgs,
    sampling: &SamplingArgs,
    out: Option<&Path>,
) -> Result<(), Failure> {
    if sampling.points == 0 || sampling.r_max.is_nan() || sampling.r_max < 0.0 {
        return Err(Failure::Usage(
            "--points must be positive and --r-max nonnegative".into(),
        ));
    }
    let sol = load_source(source)?;
    let radii = sample_radii(sampling.points, sampling.r_max, sol.support_radius);
    emit(out, &profile_csv(&sol, &radii)?)
}

#[derive(Serialize)]
struct ValidationReport {
    schema: &'static str,
    passed: bool,
    checks: Vec<CheckReport>,
}

fn basis_checks(basis: &BasisParams) -> Result<Vec<CheckReport>, Failure> {
    let mut checks = vec![check_orthogonality(basis)?];
    checks.extend(check_boundary_continuity(basis)?);
    Ok(checks)
}

fn cmd_validate(
    source: &SourceArgs,
    basis_only: bool,
    probe_r: f64,
    c_new: f64,
    delta: f64,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let checks = if basis_only {
        let (Some(dim), Some(s)) = (source.dim, source.s) else {
            return Err(Failure::Usage("--basis-only needs --dim and --s".into()));
        };
        basis_checks(&BasisParams::new(dim, s, source.numerics.trunc)?)?
    } else {
        let sol = load_source(source)?;
        let mut checks = vec![
            check_pohozaev(&sol)?,
            check_far_field_mass(&sol, probe_r * sol.support_radius)?,
            check_scaling_consistency(&sol, c_new, delta)?,
        ];
        checks.extend(basis_checks(&sol.params.basis)?);
        checks
    };
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    let report = ValidationReport {
        schema: "fracplasma/validate/1",
        passed: failed.is_empty(),
        checks: checks.clone(),
    };
    let mut text = serde_json::to_string_pretty(&report).expect("validation report serializes");
    text.push('\n');
    emit(out, &text)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Validation(format!(
            "failed checks: {}",
            failed.join(", ")
        )))
    }
}

fn sig15(x: f64) -> String {
    format!("{x:.14e}")
}

fn cmd_constants(dim: usize, s: f64, p: Option<f64>, trunc: usize) -> Result<(), Failure> {
    let basis = BasisParams::new(dim, s, trunc)?;
    let decay = p.map(|p| supercritical_constant(dim, s, p)).transpose()?;
    let h = dim as f64 / 2.0;
    let mut text = String::new();
    writeln!(text, "N = {dim}, s = {s}").unwrap();
    writeln!(
        text,
        "{:>4} {:>22} {:>22} {:>22}",
        "n", "lambda_n", "mu_n", "Q_n"
    )
    .unwrap();
    for n in 0..basis.len() {
        writeln!(
            text,
            "{n:>4} {:>22} {:>22} {:>22}",
            sig15(lambda_n(&basis, n)),
            sig15(mu_n(&basis, n)),
            sig15(q_k(&basis, n))
        )
        .unwrap();
    }
    writeln!(text, "c_Ns = {}", sig15(riesz_kernel_constant(dim, s)?)).unwrap();
    writeln!(
        text,
        "critical p (N+2s)/(N-2s) = {}",
        sig15((h + s) / (h - s))
    )
    .unwrap();
    writeln!(text, "p_c N/(N-2s) = {}", sig15(h / (h - s))).unwrap();
    writeln!(
        text,
        "m_c 2-2s/N = {}",
        sig15(fair_competition_exponent(dim, s))
    )
    .unwrap();
    writeln!(
        text,
        "critical m 2N/(N+2s) = {}",
        sig15(critical_diffusion_exponent(dim, s))
    )
    .unwrap();
    if let (Some(p), Some(c)) = (p, decay) {
        writeln!(text, "c(N,s,p) at p = {p}: {}", sig15(c)).unwrap();
    }
    print!("{text}");
    Ok(())
}
