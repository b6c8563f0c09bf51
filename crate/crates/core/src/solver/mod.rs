//! Primal-dual interior-point solver for [`ConicProblem`]s.
//!
//! The reference backend ([`InteriorPoint`]) runs a Mehrotra predictor-corrector on the
//! homogeneous self-dual embedding with Nesterov–Todd scaling, so infeasible and
//! unbounded programs end with a certificate rather than a stall. Any backend is
//! judged by the same [`residuals`] check.

mod cones;
mod external;
mod ipm;
mod kkt;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::{smat, Cone, ConicError, ConicProblem};

pub use external::ExternalSolver;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Problem(#[from] ConicError),
    #[error("invalid solver settings: {0}")]
    Settings(&'static str),
    #[error("external solver failed: {0}")]
    External(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub tol_gap: f64,
    pub tol_feas: f64,
    /// Relative tolerance for accepting an infeasibility certificate.
    pub tol_infeas: f64,
    pub max_iter: usize,
    pub step_fraction: f64,
    /// Ruiz equilibration of the equality matrix before iterating.
    pub equilibrate: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tol_gap: 1e-7, tol_feas: 1e-7, tol_infeas: 1e-8, max_iter: 200, step_fraction: 0.99, equilibrate: true }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.tol_gap > 0.0 && self.tol_feas > 0.0 && self.tol_infeas > 0.0) {
            return Err(SolverError::Settings("tolerances must be positive"));
        }
        if !(self.step_fraction > 0.0 && self.step_fraction < 1.0) {
            return Err(SolverError::Settings("step_fraction must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
    Numerical,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::MaxIter => "max_iter",
            SolveStatus::Numerical => "numerical",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "optimal" => SolveStatus::Optimal,
            "infeasible" => SolveStatus::Infeasible,
            "unbounded" => SolveStatus::Unbounded,
            "max_iter" => SolveStatus::MaxIter,
            "numerical" => SolveStatus::Numerical,
            _ => return None,
        })
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iter: usize,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub gap: f64,
    pub primal_res: f64,
    pub dual_res: f64,
    pub mu: f64,
    pub tau: f64,
    pub kappa: f64,
    pub step: f64,
}

/// Primal and dual iterate in the problem's own coordinates.
///
/// The duals satisfy `c − Aᵀ·dual_eq − dual_cone = 0` with `dual_cone` in the dual cone.
/// For an infeasibility certificate the duals are normalized to `bᵀ·dual_eq = 1`; for an
/// unboundedness certificate the primal is normalized to `cᵀx = −1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalDualSolution {
    pub status: SolveStatus,
    pub primal: Vec<f64>,
    pub dual_eq: Vec<f64>,
    pub dual_cone: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub primal_res: f64,
    pub dual_res: f64,
    pub iterations: usize,
    #[serde(default)]
    pub log: Vec<IterationLog>,
}

impl PrimalDualSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Writes the per-iteration convergence log as CSV.
    pub fn write_log_csv(&self, path: &Path) -> Result<(), SolverError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "iter,primal_obj,dual_obj,gap,primal_res,dual_res,mu,tau,kappa,step")?;
        for l in &self.log {
            writeln!(
                f,
                "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                l.iter, l.primal_obj, l.dual_obj, l.gap, l.primal_res, l.dual_res, l.mu, l.tau, l.kappa, l.step
            )?;
        }
        Ok(())
    }

    /// Plain-text form exchanged with external solvers.
    pub fn to_text(&self) -> String {
        let mut out = format!("STATUS {}\nITERATIONS {}\n", self.status, self.iterations);
        for (key, v) in [("PRIMAL", &self.primal), ("DUAL_EQ", &self.dual_eq), ("DUAL_CONE", &self.dual_cone)] {
            out.push_str(&format!("{key} {}\n", v.len()));
            for x in v {
                out.push_str(&format!("{x:?}\n"));
            }
        }
        out.push_str("END\n");
        out
    }

    /// Parses [`PrimalDualSolution::to_text`] output; residuals are recomputed against `problem`.
    pub fn from_text(problem: &ConicProblem, text: &str) -> Result<Self, SolverError> {
        let bad = |m: &str| SolverError::External(format!("malformed solution text: {m}"));
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let mut field = |key: &str| -> Result<String, SolverError> {
            let l = lines.next().ok_or_else(|| bad("truncated"))?;
            l.strip_prefix(key).map(|r| r.trim().to_string()).ok_or_else(|| bad(key))
        };
        let status = SolveStatus::parse(&field("STATUS")?).ok_or_else(|| bad("status"))?;
        let iterations = field("ITERATIONS")?.parse().map_err(|_| bad("iterations"))?;
        let mut vecs = Vec::new();
        for key in ["PRIMAL", "DUAL_EQ", "DUAL_CONE"] {
            let n: usize = field(key)?.parse().map_err(|_| bad(key))?;
            let mut v = Vec::with_capacity(n);
            for _ in 0..n {
                v.push(field("")?.parse::<f64>().map_err(|_| bad("number"))?);
            }
            vecs.push(v);
        }
        let dual_cone = vecs.pop().unwrap_or_default();
        let dual_eq = vecs.pop().unwrap_or_default();
        let primal = vecs.pop().unwrap_or_default();
        let mut sol = PrimalDualSolution {
            status,
            primal,
            dual_eq,
            dual_cone,
            objective: f64::NAN,
            dual_objective: f64::NAN,
            gap: f64::NAN,
            primal_res: f64::NAN,
            dual_res: f64::NAN,
            iterations,
            log: Vec::new(),
        };
        let r = residuals(problem, &sol)?;
        sol.objective = r.primal_obj;
        sol.dual_objective = r.dual_obj;
        sol.gap = r.gap;
        sol.primal_res = r.primal_res;
        sol.dual_res = r.dual_res;
        Ok(sol)
    }
}

/// A pluggable conic backend.
pub trait ConicSolver: Sync {
    fn name(&self) -> &str;
    fn solve(&self, problem: &ConicProblem, settings: &SolverSettings) -> Result<PrimalDualSolution, SolverError>;
}

/// The built-in homogeneous self-dual interior-point method.
#[derive(Debug, Clone, Copy, Default)]
pub struct InteriorPoint;

impl ConicSolver for InteriorPoint {
    fn name(&self) -> &str {
        "interior-point"
    }

    fn solve(&self, problem: &ConicProblem, settings: &SolverSettings) -> Result<PrimalDualSolution, SolverError> {
        ipm::solve(problem, settings)
    }
}

/// Solves with the built-in interior-point method.
pub fn solve(problem: &ConicProblem, settings: &SolverSettings) -> Result<PrimalDualSolution, SolverError> {
    InteriorPoint.solve(problem, settings)
}

/// Independent optimality measures recomputed from the problem data alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `max(‖Ax − b‖∞ / (1 + max(‖Ax‖∞, ‖b‖∞)), cone violation of x / (1 + ‖x‖∞))`.
    pub primal_res: f64,
    /// `max(‖c − Aᵀy − z‖∞ / (1 + max(‖c‖∞, ‖Aᵀy‖∞, ‖z‖∞)), dual-cone violation of z / (1 + ‖z‖∞))`.
    pub dual_res: f64,
    /// `|cᵀx − bᵀy| / (1 + |cᵀx| + |bᵀy|)`.
    pub gap: f64,
    pub primal_obj: f64,
    pub dual_obj: f64,
}

/// Recomputes residuals of `solution` against `problem` from scratch.
pub fn residuals(problem: &ConicProblem, solution: &PrimalDualSolution) -> Result<Residuals, ConicError> {
    residuals_of(problem, &solution.primal, &solution.dual_eq, &solution.dual_cone)
}

pub fn residuals_of(problem: &ConicProblem, x: &[f64], y: &[f64], z: &[f64]) -> Result<Residuals, ConicError> {
    let n = problem.num_vars;
    for (what, got, expected) in
        [("primal", x.len(), n), ("dual_eq", y.len(), problem.rhs.len()), ("dual_cone", z.len(), n)]
    {
        if got != expected {
            return Err(ConicError::DimensionMismatch { what, got, expected });
        }
    }
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let eq = problem.equality_residual(x);
    let mut ax = vec![0.0; problem.rhs.len()];
    let mut aty = vec![0.0; n];
    for &(i, j, a) in &problem.equalities {
        ax[i] += a * x[j];
        aty[j] += a * y[i];
    }
    let dres: Vec<f64> = (0..n).map(|j| problem.objective[j] - aty[j] - z[j]).collect();
    let (pv, dv) = cone_violations(problem, x, z);
    let primal_scale = 1.0 + inf(&ax).max(inf(&problem.rhs));
    let dual_scale = 1.0 + inf(&problem.objective).max(inf(&aty)).max(inf(z));
    let primal_res = (inf(&eq) / primal_scale).max(pv / (1.0 + inf(x)));
    let dual_res = (inf(&dres) / dual_scale).max(dv / (1.0 + inf(z)));
    let cx: f64 = problem.objective.iter().zip(x).map(|(c, v)| c * v).sum();
    let by: f64 = problem.rhs.iter().zip(y).map(|(b, v)| b * v).sum();
    let gap = (cx - by).abs() / (1.0 + cx.abs() + by.abs());
    Ok(Residuals {
        primal_res,
        dual_res,
        gap,
        primal_obj: cx + problem.objective_offset,
        dual_obj: by + problem.objective_offset,
    })
}

fn soc_violation(head: f64, tail: impl Iterator<Item = f64>) -> f64 {
    let nt = tail.map(|t| t * t).sum::<f64>().sqrt();
    (nt - head).max(0.0)
}

fn psd_violation(m: usize, v: &[f64]) -> f64 {
    let mat = nalgebra::DMatrix::from_row_slice(m, m, &smat(m, v));
    (-nalgebra::SymmetricEigen::new(mat).eigenvalues.min()).max(0.0)
}

/// Absolute distance-like violations of `x ∈ K` and `z ∈ K*`.
pub(crate) fn cone_violations(problem: &ConicProblem, x: &[f64], z: &[f64]) -> (f64, f64) {
    let mut pv = 0.0f64;
    let mut dv = 0.0f64;
    for (cone, r) in problem.cones.iter().zip(problem.block_ranges()) {
        let (xb, zb) = (&x[r.clone()], &z[r]);
        match *cone {
            Cone::Free(_) => dv = dv.max(zb.iter().fold(0.0, |m, v| m.max(v.abs()))),
            Cone::Nonneg(_) => {
                pv = pv.max(xb.iter().fold(0.0, |m, v| m.max(-v)));
                dv = dv.max(zb.iter().fold(0.0, |m, v| m.max(-v)));
            }
            Cone::Soc(_) => {
                pv = pv.max(soc_violation(xb[0], xb[1..].iter().copied()));
                dv = dv.max(soc_violation(zb[0], zb[1..].iter().copied()));
            }
            Cone::RotatedSoc(_) => {
                // u·v ≥ ‖w‖²  ⟺  (u + v, u − v, 2w) ∈ SOC; the dual cone is 4ab ≥ ‖c‖²
                let tail = std::iter::once(xb[0] - xb[1]).chain(xb[2..].iter().map(|w| 2.0 * w));
                pv = pv.max(0.5 * soc_violation(xb[0] + xb[1], tail));
                let tail = std::iter::once(zb[0] - zb[1]).chain(zb[2..].iter().copied());
                dv = dv.max(0.5 * soc_violation(zb[0] + zb[1], tail));
            }
            Cone::Psd(m) => {
                pv = pv.max(psd_violation(m, xb));
                dv = dv.max(psd_violation(m, zb));
            }
        }
    }
    (pv, dv)
}
