//! Standard-form conic programs.
//!
//! A [`ConicProblem`] is `min cᵀx + offset  s.t.  Ax = b,  x ∈ K₁ × K₂ × …` where the
//! cone blocks partition the variable vector in order. Supported blocks are free,
//! nonnegative orthant, second-order cone `x₀ ≥ ‖x₁..‖`, rotated second-order cone
//! `u·v ≥ ‖w‖², u, v ≥ 0`, and the cone of positive semidefinite matrices.
//!
//! PSD blocks store `svec(X)`: the lower triangle of `X` in column-major order with
//! off-diagonal entries scaled by √2, so that `⟨X, Y⟩ = svec(X)ᵀ svec(Y)`.

mod text;

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use text::{read_problem, write_problem};

/// Errors raised while building, parsing or validating a conic program.
#[derive(Debug, Error)]
pub enum ConicError {
    #[error("cone sizes sum to {cone_total} but the problem has {num_vars} variables")]
    ConeMismatch { cone_total: usize, num_vars: usize },
    #[error("PSD block side {side} exceeds the supported maximum {max}")]
    PsdTooLarge { side: usize, max: usize },
    #[error("{what} has length {got}, expected {expected}")]
    DimensionMismatch { what: &'static str, got: usize, expected: usize },
    #[error("equality entry ({row}, {var}) is out of range")]
    EntryOutOfRange { row: usize, var: usize },
    #[error("variable name `{0}` registered twice")]
    DuplicateName(String),
    #[error("malformed conic text at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Largest PSD block side accepted by the solver.
pub const MAX_PSD_SIDE: usize = 256;

/// One block of the cone partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cone {
    Free(usize),
    Nonneg(usize),
    /// `x₀ ≥ ‖(x₁, …, x_{k-1})‖₂`.
    Soc(usize),
    /// `x₀·x₁ ≥ ‖(x₂, …, x_{k-1})‖₂²` with `x₀, x₁ ≥ 0`.
    RotatedSoc(usize),
    /// Symmetric PSD matrices of the given side, stored as `svec`.
    Psd(usize),
}

impl Cone {
    /// Number of scalar variables in the block.
    pub fn dim(&self) -> usize {
        match *self {
            Cone::Free(k) | Cone::Nonneg(k) | Cone::Soc(k) | Cone::RotatedSoc(k) => k,
            Cone::Psd(m) => m * (m + 1) / 2,
        }
    }

    /// Barrier degree (contribution to the complementarity normalization).
    pub fn degree(&self) -> usize {
        match *self {
            Cone::Free(_) => 0,
            Cone::Nonneg(k) => k,
            Cone::Soc(_) | Cone::RotatedSoc(_) => 1,
            Cone::Psd(m) => m,
        }
    }

    pub fn keyword(&self) -> &'static str {
        match self {
            Cone::Free(_) => "free",
            Cone::Nonneg(_) => "nonneg",
            Cone::Soc(_) => "soc",
            Cone::RotatedSoc(_) => "rsoc",
            Cone::Psd(_) => "psd",
        }
    }

    /// The size parameter written in the text format (side for PSD, dim otherwise).
    pub fn size_param(&self) -> usize {
        match *self {
            Cone::Free(k) | Cone::Nonneg(k) | Cone::Soc(k) | Cone::RotatedSoc(k) | Cone::Psd(k) => k,
        }
    }
}

/// Index of entry `(i, j)` of an `m × m` symmetric matrix inside its svec block,
/// together with the factor `f` such that `X[i][j] = f · svec[idx]`.
pub fn svec_index(m: usize, i: usize, j: usize) -> (usize, f64) {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    let idx = col_start(m, c) + (r - c);
    let f = if r == c { 1.0 } else { std::f64::consts::FRAC_1_SQRT_2 };
    (idx, f)
}

fn col_start(m: usize, c: usize) -> usize {
    // Σ_{t<c} (m - t) = c·m − c(c−1)/2
    c * m - c * c.saturating_sub(1) / 2
}

/// Packs a dense symmetric matrix (row-major, `m × m`) into svec form.
pub fn svec(m: usize, mat: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(m * (m + 1) / 2);
    for c in 0..m {
        for r in c..m {
            let v = mat[r * m + c];
            out.push(if r == c { v } else { v * std::f64::consts::SQRT_2 });
        }
    }
    out
}

/// Unpacks svec form into a dense row-major symmetric matrix.
pub fn smat(m: usize, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m * m];
    let mut k = 0;
    for c in 0..m {
        for r in c..m {
            let x = if r == c { v[k] } else { v[k] * std::f64::consts::FRAC_1_SQRT_2 };
            out[r * m + c] = x;
            out[c * m + r] = x;
            k += 1;
        }
    }
    out
}

/// A standard-form conic program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicProblem {
    pub num_vars: usize,
    /// Dense objective coefficients, one per variable.
    pub objective: Vec<f64>,
    /// Constant added to `cᵀx` when reporting objective values.
    pub objective_offset: f64,
    /// Equality matrix as `(row, var, coeff)` triplets; duplicates are summed.
    pub equalities: Vec<(usize, usize, f64)>,
    pub rhs: Vec<f64>,
    pub cones: Vec<Cone>,
    /// Named handles to model quantities.
    pub var_map: BTreeMap<String, usize>,
}

impl ConicProblem {
    pub fn num_equalities(&self) -> usize {
        self.rhs.len()
    }

    /// Variable ranges of each cone block, in order.
    pub fn block_ranges(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        self.cones
            .iter()
            .map(|c| {
                let r = start..start + c.dim();
                start = r.end;
                r
            })
            .collect()
    }

    pub fn var(&self, name: &str) -> Option<usize> {
        self.var_map.get(name).copied()
    }

    /// Checks that the cone partition, objective, and equality data are consistent.
    pub fn validate(&self) -> Result<(), ConicError> {
        let cone_total: usize = self.cones.iter().map(Cone::dim).sum();
        if cone_total != self.num_vars {
            return Err(ConicError::ConeMismatch { cone_total, num_vars: self.num_vars });
        }
        if self.objective.len() != self.num_vars {
            return Err(ConicError::DimensionMismatch {
                what: "objective",
                got: self.objective.len(),
                expected: self.num_vars,
            });
        }
        for c in &self.cones {
            if let Cone::Psd(m) = *c {
                if m > MAX_PSD_SIDE {
                    return Err(ConicError::PsdTooLarge { side: m, max: MAX_PSD_SIDE });
                }
            }
            if let Cone::RotatedSoc(k) = *c {
                if k < 2 {
                    return Err(ConicError::ConeMismatch { cone_total, num_vars: self.num_vars });
                }
            }
        }
        let m = self.rhs.len();
        for &(row, var, _) in &self.equalities {
            if row >= m || var >= self.num_vars {
                return Err(ConicError::EntryOutOfRange { row, var });
            }
        }
        Ok(())
    }

    /// Objective value `cᵀx + offset`.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>() + self.objective_offset
    }

    /// `Ax − b`.
    pub fn equality_residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r: Vec<f64> = self.rhs.iter().map(|b| -b).collect();
        for &(row, var, a) in &self.equalities {
            r[row] += a * x[var];
        }
        r
    }
}

/// Incremental construction of a [`ConicProblem`].
///
/// Blocks are appended in order; each call to [`ProblemBuilder::block`] returns the
/// index of the first variable of the new block.
#[derive(Debug, Default, Clone)]
pub struct ProblemBuilder {
    num_vars: usize,
    objective: Vec<f64>,
    objective_offset: f64,
    equalities: Vec<(usize, usize, f64)>,
    rhs: Vec<f64>,
    cones: Vec<Cone>,
    var_map: BTreeMap<String, usize>,
}

impl ProblemBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Continues building on top of an existing problem.
    pub fn from_problem(p: ConicProblem) -> Self {
        Self {
            num_vars: p.num_vars,
            objective: p.objective,
            objective_offset: p.objective_offset,
            equalities: p.equalities,
            rhs: p.rhs,
            cones: p.cones,
            var_map: p.var_map,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_equalities(&self) -> usize {
        self.rhs.len()
    }

    /// Appends a cone block and returns the index of its first variable.
    pub fn block(&mut self, cone: Cone) -> usize {
        let start = self.num_vars;
        self.num_vars += cone.dim();
        self.objective.resize(self.num_vars, 0.0);
        self.cones.push(cone);
        start
    }

    /// Appends a single variable in its own block.
    pub fn scalar(&mut self, nonneg: bool) -> usize {
        self.block(if nonneg { Cone::Nonneg(1) } else { Cone::Free(1) })
    }

    pub fn name(&mut self, name: impl Into<String>, var: usize) -> Result<(), ConicError> {
        let name = name.into();
        if self.var_map.contains_key(&name) {
            return Err(ConicError::DuplicateName(name));
        }
        self.var_map.insert(name, var);
        Ok(())
    }

    pub fn add_cost(&mut self, var: usize, c: f64) {
        self.objective[var] += c;
    }

    pub fn add_offset(&mut self, c: f64) {
        self.objective_offset += c;
    }

    /// Adds the row `Σ coeff·x[var] = rhs` and returns its index.
    pub fn equality(&mut self, terms: &[(usize, f64)], rhs: f64) -> usize {
        let row = self.rhs.len();
        for &(var, coeff) in terms {
            if coeff != 0.0 {
                self.equalities.push((row, var, coeff));
            }
        }
        self.rhs.push(rhs);
        row
    }

    /// Adds `Σ coeff·x[var] ≤ rhs` through a fresh nonnegative slack; returns the slack.
    pub fn less_equal(&mut self, terms: &[(usize, f64)], rhs: f64) -> usize {
        let slack = self.scalar(true);
        let mut row: Vec<(usize, f64)> = terms.to_vec();
        row.push((slack, 1.0));
        self.equality(&row, rhs);
        slack
    }

    /// Adds `Σ coeff·x[var] ≥ rhs` through a fresh nonnegative slack; returns the slack.
    pub fn greater_equal(&mut self, terms: &[(usize, f64)], rhs: f64) -> usize {
        let slack = self.scalar(true);
        let mut row: Vec<(usize, f64)> = terms.to_vec();
        row.push((slack, -1.0));
        self.equality(&row, rhs);
        slack
    }

    pub fn build(self) -> ConicProblem {
        ConicProblem {
            num_vars: self.num_vars,
            objective: self.objective,
            objective_offset: self.objective_offset,
            equalities: self.equalities,
            rhs: self.rhs,
            cones: self.cones,
            var_map: self.var_map,
        }
    }
}
