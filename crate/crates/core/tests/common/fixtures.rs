//! Conic programs whose optimal objective is known in closed form.

use pvdispatch::conic::{svec_index, Cone, ConicProblem, ProblemBuilder};

pub struct Fixture {
    pub name: &'static str,
    pub problem: ConicProblem,
    pub optimum: f64,
}

/// min x s.t. x ≥ 1
pub fn lp_lower_bound() -> Fixture {
    let mut b = ProblemBuilder::new();
    let x = b.scalar(true);
    b.add_cost(x, 1.0);
    b.greater_equal(&[(x, 1.0)], 1.0);
    b.name("x", x).unwrap();
    Fixture { name: "lp_lower_bound", problem: b.build(), optimum: 1.0 }
}

/// min tr X s.t. X ⪰ 0, X₁₁ = 2
pub fn psd_completion() -> Fixture {
    let mut b = ProblemBuilder::new();
    let x = b.block(Cone::Psd(2));
    for i in 0..2 {
        let (k, f) = svec_index(2, i, i);
        b.add_cost(x + k, f);
    }
    b.equality(&[(x + svec_index(2, 0, 0).0, 1.0)], 2.0);
    b.name("X", x).unwrap();
    Fixture { name: "psd_completion", problem: b.build(), optimum: 2.0 }
}

/// min ‖(x, y)‖ s.t. x + y = 2
pub fn soc_norm() -> Fixture {
    let mut b = ProblemBuilder::new();
    let t = b.block(Cone::Soc(3));
    b.add_cost(t, 1.0);
    b.equality(&[(t + 1, 1.0), (t + 2, 1.0)], 2.0);
    b.name("x", t + 1).unwrap();
    b.name("y", t + 2).unwrap();
    Fixture { name: "soc_norm", problem: b.build(), optimum: std::f64::consts::SQRT_2 }
}

/// min −x − y s.t. x + 2y ≤ 4, 3x + y ≤ 6, x, y ≥ 0; vertex (8/5, 6/5)
pub fn lp_vertex() -> Fixture {
    let mut b = ProblemBuilder::new();
    let x = b.block(Cone::Nonneg(2));
    b.add_cost(x, -1.0);
    b.add_cost(x + 1, -1.0);
    b.less_equal(&[(x, 1.0), (x + 1, 2.0)], 4.0);
    b.less_equal(&[(x, 3.0), (x + 1, 1.0)], 6.0);
    Fixture { name: "lp_vertex", problem: b.build(), optimum: -14.0 / 5.0 }
}

/// min u + v s.t. u·v ≥ 1
pub fn rsoc_product() -> Fixture {
    let mut b = ProblemBuilder::new();
    let r = b.block(Cone::RotatedSoc(3));
    b.add_cost(r, 1.0);
    b.add_cost(r + 1, 1.0);
    b.equality(&[(r + 2, 1.0)], 1.0);
    Fixture { name: "rsoc_product", problem: b.build(), optimum: 2.0 }
}

/// min ⟨C, X⟩ s.t. tr X = 1, X ⪰ 0 equals λ_min(C) = 1 for C = [[2, 1], [1, 2]]
pub fn sdp_min_eigenvalue() -> Fixture {
    let c = [[2.0, 1.0], [1.0, 2.0]];
    let mut b = ProblemBuilder::new();
    let x = b.block(Cone::Psd(2));
    for i in 0..2 {
        for j in 0..=i {
            let (k, f) = svec_index(2, i, j);
            let w = if i == j { 1.0 } else { 2.0 };
            b.add_cost(x + k, w * f * c[i][j]);
        }
    }
    b.equality(&[(x + svec_index(2, 0, 0).0, 1.0), (x + svec_index(2, 1, 1).0, 1.0)], 1.0);
    Fixture { name: "sdp_min_eigenvalue", problem: b.build(), optimum: 1.0 }
}

/// min −Σᵢⱼ Xᵢⱼ s.t. diag X = 1, X ⪰ 0 (3 × 3); optimum at X = 11ᵀ
pub fn sdp_all_ones() -> Fixture {
    let m = 3;
    let mut b = ProblemBuilder::new();
    let x = b.block(Cone::Psd(m));
    for i in 0..m {
        for j in 0..=i {
            let (k, f) = svec_index(m, i, j);
            let w = if i == j { 1.0 } else { 2.0 };
            b.add_cost(x + k, -w * f);
        }
        b.equality(&[(x + svec_index(m, i, i).0, 1.0)], 1.0);
    }
    Fixture { name: "sdp_all_ones", problem: b.build(), optimum: -9.0 }
}

/// distance from (1, 2, 3) to the plane Σx = 0 is 6/√3
pub fn soc_plane_distance() -> Fixture {
    let a = [1.0, 2.0, 3.0];
    let mut b = ProblemBuilder::new();
    let t = b.block(Cone::Soc(4));
    b.add_cost(t, 1.0);
    // w = x − a, so Σw = −Σa
    b.equality(&[(t + 1, 1.0), (t + 2, 1.0), (t + 3, 1.0)], -a.iter().sum::<f64>());
    Fixture { name: "soc_plane_distance", problem: b.build(), optimum: 6.0 / 3f64.sqrt() }
}

/// λ_max([[1, 2], [2, 1]]) = 3 as min t s.t. tI − C ⪰ 0
pub fn sdp_max_eigenvalue() -> Fixture {
    let c = [[1.0, 2.0], [2.0, 1.0]];
    let mut b = ProblemBuilder::new();
    let t = b.scalar(false);
    let x = b.block(Cone::Psd(2));
    b.add_cost(t, 1.0);
    for i in 0..2 {
        for j in 0..=i {
            let (k, f) = svec_index(2, i, j);
            // X_ij = f·x[k] = t·δᵢⱼ − C_ij
            let mut row = vec![(x + k, f)];
            if i == j {
                row.push((t, -1.0));
            }
            b.equality(&row, -c[i][j]);
        }
    }
    Fixture { name: "sdp_max_eigenvalue", problem: b.build(), optimum: 3.0 }
}

/// max √(xy) s.t. x + y = 2, as min −w with x·y ≥ w²
pub fn rsoc_geometric_mean() -> Fixture {
    let mut b = ProblemBuilder::new();
    let r = b.block(Cone::RotatedSoc(3));
    b.add_cost(r + 2, -1.0);
    b.equality(&[(r, 1.0), (r + 1, 1.0)], 2.0);
    Fixture { name: "rsoc_geometric_mean", problem: b.build(), optimum: -1.0 }
}

/// min x² − 4x through the epigraph t·1 ≥ x²
pub fn rsoc_quadratic() -> Fixture {
    let mut b = ProblemBuilder::new();
    let r = b.block(Cone::RotatedSoc(3));
    let x = r + 2;
    b.add_cost(r, 1.0);
    b.add_cost(x, -4.0);
    b.equality(&[(r + 1, 1.0)], 1.0);
    Fixture { name: "rsoc_quadratic", problem: b.build(), optimum: -4.0 }
}

pub fn all() -> Vec<Fixture> {
    vec![
        lp_lower_bound(),
        psd_completion(),
        soc_norm(),
        lp_vertex(),
        rsoc_product(),
        sdp_min_eigenvalue(),
        sdp_all_ones(),
        soc_plane_distance(),
        sdp_max_eigenvalue(),
        rsoc_geometric_mean(),
        rsoc_quadratic(),
    ]
}

/// x ≥ 0 and x = −1
pub fn infeasible_lp() -> ConicProblem {
    let mut b = ProblemBuilder::new();
    let x = b.scalar(true);
    b.add_cost(x, 1.0);
    b.equality(&[(x, 1.0)], -1.0);
    b.build()
}

/// ‖y‖ ≤ t with t = −1
pub fn infeasible_soc() -> ConicProblem {
    let mut b = ProblemBuilder::new();
    let t = b.block(Cone::Soc(2));
    b.equality(&[(t, 1.0)], -1.0);
    b.build()
}

/// min −x s.t. x = y, x, y ≥ 0
pub fn unbounded_lp() -> ConicProblem {
    let mut b = ProblemBuilder::new();
    let x = b.block(Cone::Nonneg(2));
    b.add_cost(x, -1.0);
    b.equality(&[(x, 1.0), (x + 1, -1.0)], 0.0);
    b.build()
}
