use fracplasma::groundstate::{
    mass_scaling, rescale, rescale_to_mass, steady_state_amplitude, to_steady_state,
};
use fracplasma::riesz_basis::{oscillation, BasisParams};
use fracplasma::solver::{residual_system, solve, solve_continuation, ProblemParams};
use fracplasma::validation::coefficient_decay_report;
use fracplasma::GroundStateSolution;

fn problem(dim: usize, s: f64, p: f64, trunc: usize) -> ProblemParams {
    ProblemParams::new(BasisParams::new(dim, s, trunc).unwrap(), p).unwrap()
}

fn inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn solutions() -> Vec<GroundStateSolution> {
    [
        (1, 0.3, 0.5),
        (2, 0.5, 0.5),
        (2, 0.5, 1.0),
        (2, 0.5, 1.5),
        (3, 0.5, 1.2),
    ]
    .into_iter()
    .map(|(d, s, p)| solve(&problem(d, s, p, 48)).unwrap())
    .collect()
}

#[test]
fn residual_survives_a_finer_rule() {
    for sol in solutions() {
        let mut fine = sol.params;
        fine.quad_order = Some(2 * sol.params.quad_order());
        let r = inf(&residual_system(&fine, &sol.coeffs).unwrap());
        assert!(
            r <= 10.0 * sol.params.residual_tol,
            "p = {}: {r:e}",
            sol.p()
        );
    }
}

#[test]
fn oscillation_is_normalized() {
    for sol in solutions() {
        let osc = oscillation(&sol.params.basis, &sol.coeffs).unwrap();
        assert!((osc - 1.0).abs() < 1e-12);
        assert!((sol.central_value - sol.multiplier - 1.0).abs() < 1e-12);
        assert!(sol.multiplier > 0.0);
    }
}

#[test]
fn profiles_decrease() {
    for sol in solutions() {
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            let u = sol.u(3.0 * i as f64 / 199.0).unwrap();
            assert!(u <= prev + 1e-8, "p = {} at sample {i}", sol.p());
            prev = u;
        }
    }
}

#[test]
fn newton_converges_quadratically() {
    let (_, diag) = solve_continuation(&problem(2, 0.5, 1.0, 48), 1.5).unwrap();
    let hist: Vec<f64> = diag
        .residual_history
        .iter()
        .copied()
        .filter(|&r| r > 1e-13)
        .collect();
    assert!(hist.len() >= 3, "{hist:?}");
    for w in hist.windows(2).rev().take(3) {
        assert!(w[1] <= 10.0 * w[0] * w[0], "{hist:?}");
    }
}

#[test]
fn continuation_path_and_residuals() {
    let (sol, diag) = solve_continuation(&problem(2, 0.5, 1.0, 64), 1.6).unwrap();
    let ps: Vec<f64> = diag.continuation_path.iter().map(|x| x.0).collect();
    assert_eq!(ps.len(), 7);
    for (i, p) in ps.iter().enumerate() {
        assert!((p - (1.0 + 0.1 * i as f64)).abs() < 1e-12);
    }
    assert!(diag.continuation_path.iter().all(|x| x.1 <= 1e-10));
    assert_eq!(sol.p(), 1.6);
}

#[test]
fn truncation_is_stable_when_resolved() {
    for p in [1.5, 2.0] {
        let small = solve(&problem(2, 0.5, p, 48)).unwrap();
        assert!(small.diagnostics.tail_ratio <= 1e-8);
        let big = solve(&problem(2, 0.5, p, 64)).unwrap();
        for (x, y) in small.coeffs.c.iter().zip(&big.coeffs.c) {
            assert!((x - y).abs() < 1e-7, "p = {p}");
        }
    }
}

#[test]
fn coarse_truncation_is_flagged() {
    let sol = solve(&problem(2, 0.5, 1.8, 8)).unwrap();
    let rep = coefficient_decay_report(&sol);
    assert!(rep.under_resolved, "tail {:e}", rep.tail_ratio);
}

#[test]
fn indicator_like_profile_as_p_decreases() {
    // flatter ρ for smaller p: the ratio ρ(0.9)/ρ(0) grows as p drops
    let flat = |p: f64| {
        let sol = solve(&problem(2, 0.5, p, 48)).unwrap();
        sol.rho(0.9).unwrap() / sol.rho(0.0).unwrap()
    };
    assert!(flat(0.3) > flat(0.5));
    assert!(flat(0.5) > flat(0.8));
}

#[test]
fn concentration_grows_with_p() {
    let peak: Vec<f64> = [1.0, 1.2, 1.4, 1.6]
        .iter()
        .map(|&p| {
            let sol = solve(&problem(2, 0.5, p, 48)).unwrap();
            sol.rho(0.0).unwrap() / sol.mass
        })
        .collect();
    assert!(peak.windows(2).all(|w| w[1] > w[0]), "{peak:?}");
}

#[test]
fn steady_state_round_trip() {
    let sol = solve(&problem(2, 0.5, 1.5, 48)).unwrap();
    let view = to_steady_state(&sol, 1.7).unwrap();
    let p = 1.0 / (view.m - 1.0);
    let a = steady_state_amplitude(p) * view.chi.powf(p);
    assert!((view.solution.coeffs.a - a).abs() / a < 1e-12);
    let res = inf(&residual_system(&view.solution.params, &view.solution.coeffs).unwrap());
    assert!(res <= 10.0 * sol.diagnostics.final_residual_inf.max(f64::EPSILON));
}

#[test]
fn mass_scaling_commutes_with_rescale_at_p1() {
    let sol = solve(&problem(2, 0.5, 1.0, 48)).unwrap();
    let view = to_steady_state(&sol, 1.0).unwrap();
    let target = 3.5 * view.mass;
    let scaled = mass_scaling(&view, target).unwrap();
    // at p = 1 the mass is linear in C with δ fixed
    let direct = rescale(&view.solution, view.solution.multiplier * 3.5, 1.0).unwrap();
    for (x, y) in scaled.view.solution.coeffs.c.iter().zip(&direct.coeffs.c) {
        assert!((x - y).abs() < 1e-8);
    }
    assert_eq!(scaled.view.support_radius(), view.support_radius());
}

#[test]
fn p1_amplitude_depends_only_on_the_basis() {
    let sol = solve(&problem(2, 0.5, 1.0, 48)).unwrap();
    for factor in [0.1, 2.0, 40.0] {
        let other = rescale_to_mass(&sol, factor * sol.mass).unwrap();
        assert_eq!(other.coeffs.a, sol.coeffs.a);
    }
}

#[test]
fn supercritical_target_is_rejected() {
    let base = problem(2, 0.5, 1.0, 16);
    let err = solve_continuation(&base, 3.2).unwrap_err();
    assert!(err.to_string().contains("= 3"), "{err}");
}
