use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ValidateError;
use crate::feeder::FeederModel;

pub const MAX_ITER: usize = 50;
pub const TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFlowResult {
    /// Per-node voltage phasors, pu; node 0 is the slack.
    pub voltages: Vec<Complex64>,
    /// `V_n (Y v)_n*` per node, pu.
    pub injections: Vec<Complex64>,
    pub converged: bool,
    pub iterations: usize,
    pub max_mismatch: f64,
    /// Max mismatch before each Newton step and after the last.
    pub mismatch_history: Vec<f64>,
}

fn injections(y: &DMatrix<Complex64>, v: &[Complex64]) -> Vec<Complex64> {
    let dim = v.len();
    (0..dim)
        .map(|n| {
            let i: Complex64 = (0..dim).map(|k| y[(n, k)] * v[k]).sum();
            v[n] * i.conj()
        })
        .collect()
}

/// Polar Newton–Raphson from a flat start. `s_spec[n]` is the specified net injection at
/// node `n` (pu); entry 0 is ignored.
pub fn newton_pu(y: &DMatrix<Complex64>, s_spec: &[Complex64], v_slack: f64) -> Result<PowerFlowResult, ValidateError> {
    let dim = y.nrows();
    if s_spec.len() != dim {
        return Err(ValidateError::DimensionMismatch { got: s_spec.len(), expected: dim });
    }
    let n = dim - 1;
    let mut vm = vec![v_slack; dim];
    let mut va = vec![0.0; dim];
    let phasors = |vm: &[f64], va: &[f64]| -> Vec<Complex64> {
        vm.iter().zip(va).map(|(&m, &a)| Complex64::from_polar(m, a)).collect()
    };
    let mut history = Vec::new();
    for iter in 0..=MAX_ITER {
        let v = phasors(&vm, &va);
        let s = injections(y, &v);
        // [ΔP; ΔQ] over non-slack nodes
        let mut f = DVector::zeros(2 * n);
        for k in 0..n {
            let d = s[k + 1] - s_spec[k + 1];
            f[k] = d.re;
            f[n + k] = d.im;
        }
        let mismatch = f.amax();
        history.push(mismatch);
        if mismatch <= TOLERANCE {
            return Ok(PowerFlowResult {
                voltages: v,
                injections: s,
                converged: true,
                iterations: iter,
                max_mismatch: mismatch,
                mismatch_history: history,
            });
        }
        if iter == MAX_ITER || !mismatch.is_finite() {
            break;
        }
        let jac = jacobian(y, &v);
        let dx = jac.lu().solve(&(-f)).ok_or(ValidateError::SingularJacobian)?;
        for k in 0..n {
            va[k + 1] += dx[k];
            vm[k + 1] += dx[n + k];
        }
    }
    Err(ValidateError::Diverged { mismatch: *history.last().unwrap_or(&f64::NAN) })
}

/// `∂(P, Q)/∂(θ, |V|)` over non-slack nodes.
fn jacobian(y: &DMatrix<Complex64>, v: &[Complex64]) -> DMatrix<f64> {
    let dim = v.len();
    let n = dim - 1;
    let i: Vec<Complex64> = (0..dim).map(|a| (0..dim).map(|b| y[(a, b)] * v[b]).sum()).collect();
    let j = Complex64::new(0.0, 1.0);
    let mut jac = DMatrix::zeros(2 * n, 2 * n);
    for a in 1..dim {
        for b in 1..dim {
            let unit = v[b] / v[b].norm();
            // dS_a/dθ_b and dS_a/d|V_b|
            let mut ds_da = -j * v[a] * (y[(a, b)] * v[b]).conj();
            let mut ds_dm = v[a] * (y[(a, b)] * unit).conj();
            if a == b {
                ds_da += j * v[a] * i[a].conj();
                ds_dm += i[a].conj() * unit;
            }
            jac[(a - 1, b - 1)] = ds_da.re;
            jac[(n + a - 1, b - 1)] = ds_da.im;
            jac[(a - 1, n + b - 1)] = ds_dm.re;
            jac[(n + a - 1, n + b - 1)] = ds_dm.im;
        }
    }
    jac
}

/// Solves the feeder with per-node net injections in watts and vars.
pub fn newton_power_flow(
    feeder: &FeederModel,
    p_w: &[f64],
    q_var: &[f64],
    v_slack: f64,
) -> Result<PowerFlowResult, ValidateError> {
    let dim = feeder.dim();
    if p_w.len() != dim || q_var.len() != dim {
        return Err(ValidateError::DimensionMismatch { got: p_w.len().min(q_var.len()), expected: dim });
    }
    let sb = feeder.base.s_va;
    let s: Vec<Complex64> = p_w.iter().zip(q_var).map(|(p, q)| Complex64::new(p / sb, q / sb)).collect();
    newton_pu(&feeder.admittance_pu(), &s, v_slack)
}

/// Net injections of the feeder's static loads plus the given per-house generation.
pub fn house_injections(feeder: &FeederModel, gen_w: &[f64], gen_var: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; feeder.dim()];
    let mut q = vec![0.0; feeder.dim()];
    for (k, &node) in feeder.inverter_nodes().iter().enumerate() {
        p[node] = gen_w[k];
        q[node] = gen_var[k];
    }
    for node in &feeder.nodes {
        p[node.index] -= node.load_w;
        q[node.index] -= node.load_var;
    }
    (p, q)
}
