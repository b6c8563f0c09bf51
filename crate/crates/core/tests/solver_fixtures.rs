mod common;

use common::fixtures;
use pvdispatch::conic::{read_problem, svec_index, write_problem};
use pvdispatch::solver::{residuals, solve, SolveStatus, SolverSettings};

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1.0)
}

#[test]
fn closed_form_fixtures() {
    let settings = SolverSettings::default();
    for f in fixtures::all() {
        let sol = solve(&f.problem, &settings).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal, "{}: {:?}", f.name, sol.status);
        let r = residuals(&f.problem, &sol).unwrap();
        assert!(r.gap <= settings.tol_gap, "{} gap {}", f.name, r.gap);
        assert!(r.primal_res <= settings.tol_feas && r.dual_res <= settings.tol_feas, "{}", f.name);
        assert!(rel_err(sol.objective, f.optimum) <= 1e-6, "{}: {} vs {}", f.name, sol.objective, f.optimum);
    }
}

#[test]
fn lp_lower_bound_primal() {
    let f = fixtures::lp_lower_bound();
    let sol = solve(&f.problem, &SolverSettings::default()).unwrap();
    let x = sol.primal[f.problem.var("x").unwrap()];
    assert!((x - 1.0).abs() < 1e-6);
}

#[test]
fn psd_completion_has_zero_off_diagonal() {
    let f = fixtures::psd_completion();
    let sol = solve(&f.problem, &SolverSettings::default()).unwrap();
    let x = f.problem.var("X").unwrap();
    let (k01, _) = svec_index(2, 1, 0);
    let (k11, _) = svec_index(2, 1, 1);
    assert!(sol.primal[x + k01].abs() < 1e-6);
    assert!(sol.primal[x + k11].abs() < 1e-6);
}

#[test]
fn soc_norm_is_symmetric() {
    let f = fixtures::soc_norm();
    let sol = solve(&f.problem, &SolverSettings::default()).unwrap();
    let x = sol.primal[f.problem.var("x").unwrap()];
    let y = sol.primal[f.problem.var("y").unwrap()];
    assert!((x - 1.0).abs() < 1e-6 && (y - 1.0).abs() < 1e-6);
}

#[test]
fn infeasibility_is_certified() {
    for p in [fixtures::infeasible_lp(), fixtures::infeasible_soc()] {
        let sol = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
        // Farkas: Aᵀy + z = 0, z ∈ K*, bᵀy = 1
        let by: f64 = p.rhs.iter().zip(&sol.dual_eq).map(|(b, y)| b * y).sum();
        assert!((by - 1.0).abs() < 1e-9);
    }
}

#[test]
fn unboundedness_is_certified() {
    let p = fixtures::unbounded_lp();
    let sol = solve(&p, &SolverSettings::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Unbounded);
    let cx: f64 = p.objective.iter().zip(&sol.primal).map(|(c, x)| c * x).sum();
    assert!((cx + 1.0).abs() < 1e-9);
}

#[test]
fn objective_scaling_leaves_argmin_unchanged() {
    let settings = SolverSettings::default();
    for f in fixtures::all() {
        let base = solve(&f.problem, &settings).unwrap();
        let mut scaled = f.problem.clone();
        scaled.objective.iter_mut().for_each(|c| *c *= 37.5);
        let sol = solve(&scaled, &settings).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal, "{}", f.name);
        for (a, b) in base.primal.iter().zip(&sol.primal) {
            assert!((a - b).abs() <= 1e-5 * (1.0 + a.abs()), "{}: {a} vs {b}", f.name);
        }
    }
}

#[test]
fn solve_is_deterministic() {
    let f = fixtures::sdp_all_ones();
    let a = solve(&f.problem, &SolverSettings::default()).unwrap();
    let b = solve(&f.problem, &SolverSettings::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn text_roundtrip_solves_identically() {
    for f in fixtures::all() {
        let back = read_problem(&write_problem(&f.problem)).unwrap();
        let a = solve(&f.problem, &SolverSettings::default()).unwrap();
        let b = solve(&back, &SolverSettings::default()).unwrap();
        assert_eq!(a.primal, b.primal, "{}", f.name);
    }
}
