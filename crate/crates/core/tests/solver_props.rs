use proptest::prelude::*;
use pvdispatch::conic::{Cone, ConicProblem, ProblemBuilder};
use pvdispatch::solver::{residuals, solve, SolveStatus, SolverSettings};

/// min ‖x − a‖₂ s.t. x ≥ 0, Σx = s, with `x` at variables `1 + k ..= 2k`.
fn projection(a: &[f64], s: f64) -> ConicProblem {
    let k = a.len();
    let mut b = ProblemBuilder::new();
    let t = b.block(Cone::Soc(k + 1));
    let x = b.block(Cone::Nonneg(k));
    b.add_cost(t, 1.0);
    for i in 0..k {
        // w_i − x_i = −a_i
        b.equality(&[(t + 1 + i, 1.0), (x + i, -1.0)], -a[i]);
    }
    let sum: Vec<_> = (0..k).map(|i| (x + i, 1.0)).collect();
    b.equality(&sum, s);
    b.build()
}

/// Euclidean projection onto `{x ≥ 0, Σx = s}` by sorting.
fn simplex_projection(a: &[f64], s: f64) -> Vec<f64> {
    let mut u = a.to_vec();
    u.sort_by(|p, q| q.total_cmp(p));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - s) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    a.iter().map(|&ai| (ai - theta).max(0.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projection_matches_closed_form_and_ignores_objective_scale(
        a in prop::collection::vec(-2.0f64..2.0, 1..6),
        s in 0.1f64..3.0,
        scale in 0.01f64..100.0,
    ) {
        let k = a.len();
        let settings = SolverSettings::default();
        let problem = projection(&a, s);
        let want = simplex_projection(&a, s);
        let dist = a.iter().zip(&want).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();

        let base = solve(&problem, &settings).unwrap();
        prop_assert_eq!(base.status, SolveStatus::Optimal);
        prop_assert!((base.objective - dist).abs() <= 1e-6 * (1.0 + dist));
        let r = residuals(&problem, &base).unwrap();
        prop_assert!(r.primal_res <= settings.tol_feas && r.dual_res <= settings.tol_feas && r.gap <= settings.tol_gap);

        // the argmin is only determined to about the square root of the objective accuracy
        let tight = SolverSettings { tol_gap: 1e-11, tol_feas: 1e-11, ..settings };
        let base = solve(&problem, &tight).unwrap();
        let mut scaled = problem.clone();
        scaled.objective.iter_mut().for_each(|c| *c *= scale);
        let sol = solve(&scaled, &tight).unwrap();
        prop_assert_eq!(base.status, SolveStatus::Optimal);
        prop_assert_eq!(sol.status, SolveStatus::Optimal);
        for i in 0..k {
            let (x0, x1) = (base.primal[1 + k + i], sol.primal[1 + k + i]);
            prop_assert!((x0 - x1).abs() <= 1e-5 * (1.0 + x0.abs()), "x[{}]: {} vs {}", i, x0, x1);
            prop_assert!((x0 - want[i]).abs() <= 1e-4, "x[{}]: {} vs closed form {}", i, x0, want[i]);
        }
    }
}
