use serde::{Deserialize, Serialize};

use super::{ScenarioError, ScenarioSet};

/// How surplus generation is measured.
#[derive(Debug, Clone, Copy)]
pub enum Surplus<'a> {
    /// `Σ_h [p_h − d_h]₊`
    Inverter,
    /// `Σ_h [p_h − load_h − (d_h − ell_h)]₊`
    Net { loads: &'a [f64], ell: &'a [f64] },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvarEstimate {
    pub var: f64,
    pub cvar: f64,
    pub beta: f64,
}

fn same_len(what: &'static str, got: usize, expected: usize) -> Result<(), ScenarioError> {
    if got == expected {
        Ok(())
    } else {
        Err(ScenarioError::DimensionMismatch { what, got, expected })
    }
}

pub fn surplus(d: &[f64], p: &[f64], mode: Surplus<'_>) -> Result<f64, ScenarioError> {
    same_len("available power", p.len(), d.len())?;
    match mode {
        Surplus::Inverter => Ok(d.iter().zip(p).map(|(d, p)| (p - d).max(0.0)).sum()),
        Surplus::Net { loads, ell } => {
            same_len("loads", loads.len(), d.len())?;
            same_len("ell", ell.len(), d.len())?;
            Ok((0..d.len()).map(|h| (p[h] - loads[h] - (d[h] - ell[h])).max(0.0)).sum())
        }
    }
}

/// Sample-average `α + 1/(S(1−β)) Σ_s [r_s − α]₊` over precomputed surpluses.
pub fn r_hat_of(alpha: f64, surpluses: &[f64], beta: f64) -> Result<f64, ScenarioError> {
    if !(0.0..1.0).contains(&beta) {
        return Err(ScenarioError::BetaOutOfRange(beta));
    }
    if surpluses.is_empty() {
        return Err(ScenarioError::EmptySamples);
    }
    let excess: f64 = surpluses.iter().map(|r| (r - alpha).max(0.0)).sum();
    Ok(alpha + excess / (surpluses.len() as f64 * (1.0 - beta)))
}

/// [`r_hat_of`] with inverter-mode surpluses of `d` against every scenario.
pub fn r_hat(alpha: f64, d: &[f64], scenarios: &ScenarioSet, beta: f64) -> Result<f64, ScenarioError> {
    let r = scenarios
        .samples
        .iter()
        .map(|p| surplus(d, p, Surplus::Inverter))
        .collect::<Result<Vec<_>, _>>()?;
    r_hat_of(alpha, &r, beta)
}

/// Minimizes the sample-average objective over `α` by scanning the sorted samples; the
/// minimizer is the smallest breakpoint attaining the minimum.
pub fn empirical_cvar(samples: &[f64], beta: f64) -> Result<CvarEstimate, ScenarioError> {
    if samples.is_empty() {
        return Err(ScenarioError::EmptySamples);
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(ScenarioError::BetaOutOfRange(beta));
    }
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len();
    let scale = 1.0 / (n as f64 * (1.0 - beta));
    // suffix[k] = Σ_{i ≥ k} x_i
    let mut suffix = vec![0.0; n + 1];
    for k in (0..n).rev() {
        suffix[k] = suffix[k + 1] + x[k];
    }
    let objective = |k: usize| x[k] + scale * (suffix[k + 1] - (n - k - 1) as f64 * x[k]);
    let values: Vec<f64> = (0..n).map(objective).collect();
    let best = values.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * (1.0 + best.abs());
    let k = values.iter().position(|&v| v <= best + tol).expect("nonempty");
    Ok(CvarEstimate { var: x[k], cvar: best, beta })
}
