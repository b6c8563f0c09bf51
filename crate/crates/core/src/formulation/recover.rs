use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::{Availability, OidProblem, VBlock};
use crate::feeder::FeederModel;
use crate::scenario::{empirical_cvar, r_hat, surplus, Surplus};
use crate::solver::{PrimalDualSolution, SolveStatus};
use crate::validate::{extract_voltages, ValidateError, RANK_TOL};

/// Houses with `‖(P_c, Q_c)‖₂` above this many per unit count as selected.
pub const SELECTION_TOL: f64 = 1e-4;

/// Dispatch recovered from a solved program. Powers in W / var.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispatchSolution {
    #[serde(skip)]
    pub v_matrix: DMatrix<Complex64>,
    pub v: Vec<Complex64>,
    pub p_c: Vec<f64>,
    pub q_c: Vec<f64>,
    /// Presumed available power.
    pub d: Vec<f64>,
    pub z: Vec<f64>,
    /// VaR of surplus generation at `d`.
    pub alpha: Option<f64>,
    /// Sample-average CVaR of surplus generation at `(alpha, d)`.
    pub cvar: Option<f64>,
    /// Positions (0-based, in inverter order) of houses providing services.
    pub selected: Vec<usize>,
    /// Cost units per kW.
    pub objective: f64,
    pub rank_ratio: f64,
    pub status: SolveStatus,
    pub gap: f64,
    pub primal_res: f64,
    pub dual_res: f64,
    pub iterations: usize,
}

impl DispatchSolution {
    pub fn max_voltage(&self) -> f64 {
        self.v.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn min_voltage(&self) -> f64 {
        self.v.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min)
    }
}

/// Phasors from the diagonal and edge entries of `V` by walking the feeder tree.
pub fn tree_voltages(feeder: &FeederModel, v: &DMatrix<Complex64>) -> Vec<Complex64> {
    let parent = feeder.bfs_tree();
    let mut out = vec![Complex64::new(0.0, 0.0); feeder.dim()];
    for node in feeder.bfs_order() {
        let mag = v[(node, node)].re.max(0.0).sqrt();
        let angle = match parent[node] {
            None => 0.0,
            Some((p, _)) => out[p].arg() - v[(p, node)].arg(),
        };
        out[node] = Complex64::from_polar(mag, angle);
    }
    out
}

/// Largest `λ₂/λ₁` over the 2×2 principal blocks on feeder edges.
fn edge_rank_ratio(feeder: &FeederModel, v: &DMatrix<Complex64>) -> f64 {
    feeder
        .edges
        .iter()
        .map(|e| {
            let (a, b, c) = (v[(e.from, e.from)].re, v[(e.to, e.to)].re, v[(e.from, e.to)]);
            let mid = (a + b) / 2.0;
            let r = (((a - b) / 2.0).powi(2) + c.norm_sqr()).sqrt();
            if mid + r > 0.0 { ((mid - r) / (mid + r)).max(0.0) } else { 0.0 }
        })
        .fold(0.0, f64::max)
}

pub fn recover(problem: &OidProblem, sol: &PrimalDualSolution) -> Result<DispatchSolution, ValidateError> {
    let x = &sol.primal;
    let lay = &problem.layout;
    let sb = problem.s_base();
    let feeder = &problem.instance.feeder;
    let v_matrix = lay.v.read(x);
    let (v, rank_ratio) = match lay.v {
        VBlock::Sdp { .. } => {
            let r = extract_voltages(&v_matrix, RANK_TOL)?;
            (r.v, r.rank_ratio)
        }
        VBlock::Socp { .. } => (tree_voltages(feeder, &v_matrix), edge_rank_ratio(feeder, &v_matrix)),
    };
    let watts = |vars: &[usize]| vars.iter().map(|&i| x[i] * sb).collect::<Vec<_>>();
    let p_c = watts(&lay.p_c);
    let q_c = watts(&lay.q_c);
    let z = watts(&lay.z);
    let (d, alpha, cvar) = match &problem.instance.availability {
        Availability::Known(p) => (p.clone(), None, None),
        Availability::Scenarios { set, beta } => {
            let d = watts(lay.d.as_deref().unwrap_or(&[]));
            match lay.alpha {
                Some(a) => {
                    let alpha = x[a] * sb;
                    (d.clone(), Some(alpha), r_hat(alpha, &d, set, *beta).ok())
                }
                None => {
                    let r: Vec<f64> =
                        set.samples.iter().map(|p| surplus(&d, p, Surplus::Inverter).unwrap_or(f64::NAN)).collect();
                    let est = empirical_cvar(&r, *beta).ok();
                    (d, est.map(|e| e.var), est.map(|e| e.cvar))
                }
            }
        }
    };
    let selected = (0..p_c.len()).filter(|&h| p_c[h].hypot(q_c[h]) / sb > SELECTION_TOL).collect();
    Ok(DispatchSolution {
        v_matrix,
        v,
        p_c,
        q_c,
        d,
        z,
        alpha,
        cvar,
        selected,
        objective: problem.conic.objective_value(x) * sb / 1000.0,
        rank_ratio,
        status: sol.status,
        gap: sol.gap,
        primal_res: sol.primal_res,
        dual_res: sol.dual_res,
        iterations: sol.iterations,
    })
}
