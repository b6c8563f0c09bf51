use std::path::PathBuf;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};

use super::{residuals, ConicSolver, PrimalDualSolution, SolveStatus, SolverError, SolverSettings};
use crate::conic::{write_problem, ConicProblem};

static COUNTER: AtomicUsize = AtomicUsize::new(0);

/// Delegates to an external program through the sparse text format.
///
/// The program is invoked as `program [args…] <problem.txt> <solution.txt>` and must
/// write a solution in the [`PrimalDualSolution::to_text`] layout. Its claimed status is
/// trusted only if the residual check agrees: an "optimal" answer that fails the
/// tolerances is downgraded to [`SolveStatus::Numerical`].
#[derive(Debug, Clone)]
pub struct ExternalSolver {
    pub program: PathBuf,
    pub args: Vec<String>,
}

impl ExternalSolver {
    pub fn new(program: impl Into<PathBuf>, args: Vec<String>) -> Self {
        Self { program: program.into(), args }
    }
}

impl ConicSolver for ExternalSolver {
    fn name(&self) -> &str {
        "external"
    }

    fn solve(&self, problem: &ConicProblem, settings: &SolverSettings) -> Result<PrimalDualSolution, SolverError> {
        problem.validate()?;
        let id = COUNTER.fetch_add(1, Ordering::Relaxed);
        let dir = std::env::temp_dir();
        let stem = format!("pvdispatch-{}-{id}", std::process::id());
        let prob_path = dir.join(format!("{stem}.problem.txt"));
        let sol_path = dir.join(format!("{stem}.solution.txt"));
        std::fs::write(&prob_path, write_problem(problem))?;
        let out = Command::new(&self.program).args(&self.args).arg(&prob_path).arg(&sol_path).output();
        let _ = std::fs::remove_file(&prob_path);
        let out = out?;
        if !out.status.success() {
            let _ = std::fs::remove_file(&sol_path);
            return Err(SolverError::External(String::from_utf8_lossy(&out.stderr).into_owned()));
        }
        let text = std::fs::read_to_string(&sol_path)?;
        let _ = std::fs::remove_file(&sol_path);
        let mut sol = PrimalDualSolution::from_text(problem, &text)?;
        if sol.status == SolveStatus::Optimal {
            let r = residuals(problem, &sol)?;
            if r.primal_res > settings.tol_feas || r.dual_res > settings.tol_feas || r.gap > settings.tol_gap {
                sol.status = SolveStatus::Numerical;
            }
        }
        Ok(sol)
    }
}
