//! Optimal inverter dispatch as a conic program: the deterministic problem at known
//! available power, the CVaR risk-aware problem over scenarios, and the edge-wise SOCP
//! relaxation for radial feeders.
//!
//! Powers enter the program in per unit of the feeder base; the reported objective is in
//! cost units per kW.

mod recover;
mod vblock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::{Cone, ConicProblem, ProblemBuilder};
use crate::feeder::{FeederModel, InverterSpec};
use crate::scenario::ScenarioSet;

pub use recover::{recover, tree_voltages, DispatchSolution, SELECTION_TOL};
pub use vblock::{Term, VBlock};

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error("voltage window is empty or excludes the slack setpoint")]
    InfeasibleBounds,
    #[error("available power at house {0} is negative")]
    NegativeAvailablePower(usize),
    #[error("cost weights must be nonnegative")]
    NegativeCost,
    #[error("scenario set is empty")]
    EmptyScenarioSet,
    #[error("beta {0} outside (0, 1)")]
    BetaOutOfRange(f64),
    #[error("feeder is not radial")]
    NotRadial,
    #[error("{what}: length {got}, expected {expected}")]
    DimensionMismatch { what: &'static str, got: usize, expected: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostConfig {
    /// Losses.
    pub c_l: f64,
    /// Curtailment.
    pub c_p: f64,
    /// Group-sparsity weight on `‖(P_c,h, Q_c,h)‖₂`.
    pub c_z: f64,
    /// Risk weight on the CVaR of surplus generation.
    pub c_r: f64,
    #[serde(default)]
    pub fairness_weight: f64,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self { c_l: 1.0, c_p: 0.5, c_z: 0.9, c_r: 1.0, fairness_weight: 0.0 }
    }
}

impl CostConfig {
    fn validate(&self) -> Result<(), FormulationError> {
        let all = [self.c_l, self.c_p, self.c_z, self.c_r, self.fairness_weight];
        if all.iter().all(|w| *w >= 0.0 && w.is_finite()) {
            Ok(())
        } else {
            Err(FormulationError::NegativeCost)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoltageLimits {
    pub v_min: f64,
    pub v_max: f64,
    pub v_slack: f64,
}

impl Default for VoltageLimits {
    fn default() -> Self {
        Self { v_min: 0.917, v_max: 1.042, v_slack: 1.02 }
    }
}

impl VoltageLimits {
    fn validate(&self) -> Result<(), FormulationError> {
        if 0.0 < self.v_min && self.v_min < self.v_max && (self.v_min..=self.v_max).contains(&self.v_slack) {
            Ok(())
        } else {
            Err(FormulationError::InfeasibleBounds)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relaxation {
    #[default]
    Sdp,
    Socp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FormulationOptions {
    pub relaxation: Relaxation,
    /// Encode the selection epigraph as the 3×3 LMI instead of a second-order cone.
    pub selection_lmi: bool,
}

/// Available power: known (deterministic) or described by scenarios (risk-aware).
#[derive(Debug, Clone, PartialEq)]
pub enum Availability {
    Known(Vec<f64>),
    Scenarios { set: ScenarioSet, beta: f64 },
}

/// Everything needed to (re)assemble a dispatch problem. Powers in W / var.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    /// Feeder with the loads of the hour.
    pub feeder: FeederModel,
    pub availability: Availability,
    pub cost: CostConfig,
    pub vlim: VoltageLimits,
    pub options: FormulationOptions,
}

/// Variable handles of an assembled problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub v: VBlock,
    /// Inverter node indices, in the order of the per-house vectors below.
    pub houses: Vec<usize>,
    pub p_c: Vec<usize>,
    pub q_c: Vec<usize>,
    pub z: Vec<usize>,
    pub d: Option<Vec<usize>>,
    pub alpha: Option<usize>,
    /// First of `S` tail excesses.
    pub y: Option<usize>,
    /// First of `S·|H|` per-house excesses, scenario-major.
    pub u: Option<usize>,
    pub fairness: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OidProblem {
    pub conic: ConicProblem,
    pub layout: Layout,
    pub instance: Instance,
}

impl OidProblem {
    /// Watts per per-unit power.
    pub fn s_base(&self) -> f64 {
        self.instance.feeder.base.s_va
    }
}

fn inverters(feeder: &FeederModel) -> Vec<(usize, InverterSpec)> {
    feeder.nodes.iter().filter_map(|n| n.inverter.map(|i| (n.index, i))).collect()
}

pub fn assemble_deterministic(
    feeder: &FeederModel,
    p_av: &[f64],
    cost: CostConfig,
    vlim: VoltageLimits,
    options: FormulationOptions,
) -> Result<OidProblem, FormulationError> {
    if let Some(h) = p_av.iter().position(|p| !(*p >= 0.0)) {
        return Err(FormulationError::NegativeAvailablePower(h));
    }
    assemble(Instance {
        feeder: feeder.clone(),
        availability: Availability::Known(p_av.to_vec()),
        cost,
        vlim,
        options,
    })
}

pub fn assemble_risk_aware(
    feeder: &FeederModel,
    scenarios: &ScenarioSet,
    cost: CostConfig,
    vlim: VoltageLimits,
    beta: f64,
    options: FormulationOptions,
) -> Result<OidProblem, FormulationError> {
    if scenarios.is_empty() {
        return Err(FormulationError::EmptyScenarioSet);
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(FormulationError::BetaOutOfRange(beta));
    }
    assemble(Instance {
        feeder: feeder.clone(),
        availability: Availability::Scenarios { set: scenarios.clone(), beta },
        cost,
        vlim,
        options,
    })
}

/// Rebuilds the problem with per-edge rotated cones in place of the PSD cone on `V`.
pub fn socp_form(problem: &OidProblem) -> Result<OidProblem, FormulationError> {
    let mut inst = problem.instance.clone();
    inst.options.relaxation = Relaxation::Socp;
    assemble(inst)
}

/// Appends `t ≥ ‖Π p_c‖₂` with `Π = I − 11ᵀ/|H|` and adds `weight·t` to the objective.
pub fn fairness_term(problem: &OidProblem, weight: f64) -> OidProblem {
    let mut b = ProblemBuilder::from_problem(problem.conic.clone());
    let t = add_fairness(&mut b, &problem.layout.p_c, weight);
    let mut out = problem.clone();
    out.conic = b.build();
    out.layout.fairness = Some(t);
    out.instance.cost.fairness_weight += weight;
    out
}

fn add_fairness(b: &mut ProblemBuilder, p_c: &[usize], weight: f64) -> usize {
    let h = p_c.len();
    let t = b.block(Cone::Soc(h + 1));
    let _ = b.name("fairness", t);
    b.add_cost(t, weight);
    let mean = 1.0 / h as f64;
    for (k, &pk) in p_c.iter().enumerate() {
        // w_k = p_k − mean(p)
        let mut row = vec![(t + 1 + k, 1.0)];
        for &pj in p_c {
            row.push((pj, if pj == pk { mean - 1.0 } else { mean }));
        }
        b.equality(&row, 0.0);
    }
    t
}

/// Whether `(P_c, Q_c)` lies in the inverter's operating region at available power `P_av`.
pub fn oid_region_membership(p_c: f64, q_c: f64, p_av: f64, inv: &InverterSpec, tol: f64) -> bool {
    let head = p_av - p_c;
    let wedge = if inv.min_pf_angle >= std::f64::consts::FRAC_PI_2 {
        true
    } else {
        q_c.abs() <= inv.min_pf_angle.tan() * head + tol
    };
    p_c >= -tol && p_c <= p_av + tol && q_c * q_c <= inv.s_rating * inv.s_rating - head * head + tol && wedge
}

/// Selection epigraph `z ≥ ‖(P_c, Q_c)‖₂` as SOC or as the 3×3 LMI; returns `(z, P_c, Q_c)`.
fn selection_block(b: &mut ProblemBuilder, lmi: bool) -> (usize, usize, usize) {
    if !lmi {
        let s = b.block(Cone::Soc(3));
        return (s, s + 1, s + 2);
    }
    use crate::conic::svec_index;
    // [[z, P, Q], [P, z, 0], [Q, 0, z]] ⪰ 0
    let m = b.block(Cone::Psd(3));
    let at = |i, j| {
        let (k, f) = svec_index(3, i, j);
        (m + k, f)
    };
    let (z0, p, q) = (at(0, 0), at(1, 0), at(2, 0));
    for d in [at(1, 1), at(2, 2)] {
        b.equality(&[(d.0, d.1), (z0.0, -z0.1)], 0.0);
    }
    let zero = at(2, 1);
    b.equality(&[zero], 0.0);
    // entries are X_ij = f·x; P_c and Q_c are the matrix entries, so expose fresh free copies
    let pc = b.scalar(false);
    let qc = b.scalar(false);
    b.equality(&[(pc, 1.0), (p.0, -p.1)], 0.0);
    b.equality(&[(qc, 1.0), (q.0, -q.1)], 0.0);
    (z0.0, pc, qc)
}

fn assemble(inst: Instance) -> Result<OidProblem, FormulationError> {
    inst.cost.validate()?;
    inst.vlim.validate()?;
    let feeder = &inst.feeder;
    let sb = feeder.base.s_va;
    let invs = inverters(feeder);
    let nh = invs.len();
    let dim = feeder.dim();
    let y = feeder.admittance_pu();
    let cost = inst.cost;
    let vlim = inst.vlim;

    let mut b = ProblemBuilder::new();
    let v = match inst.options.relaxation {
        Relaxation::Sdp => VBlock::sdp(&mut b, dim),
        Relaxation::Socp => {
            if !feeder.radial {
                return Err(FormulationError::NotRadial);
            }
            let edges: Vec<_> = feeder.edges.iter().map(|e| (e.from, e.to)).collect();
            VBlock::socp(&mut b, dim, &edges)
        }
    };
    let _ = b.name("V", v.diag(0).0);

    // presumed power: a variable in the risk-aware problem, the known value otherwise
    let (known, risk) = match &inst.availability {
        Availability::Known(p) => {
            if p.len() != nh {
                return Err(FormulationError::DimensionMismatch { what: "available power", got: p.len(), expected: nh });
            }
            (Some(p.iter().map(|w| w / sb).collect::<Vec<_>>()), None)
        }
        Availability::Scenarios { set, beta } => {
            if set.houses() != nh {
                return Err(FormulationError::DimensionMismatch { what: "scenario houses", got: set.houses(), expected: nh });
            }
            (None, Some((set, *beta)))
        }
    };

    let mut p_c = Vec::with_capacity(nh);
    let mut q_c = Vec::with_capacity(nh);
    let mut z = Vec::with_capacity(nh);
    let mut d_vars = risk.map(|_| Vec::with_capacity(nh));
    // presumed-power expression per house: constant or d_h
    for (h, &(node, inv)) in invs.iter().enumerate() {
        let (zh, pc, qc) = selection_block(&mut b, inst.options.selection_lmi);
        let _ = b.name(format!("z[{h}]"), zh);
        let _ = b.name(format!("P_c[{h}]"), pc);
        let _ = b.name(format!("Q_c[{h}]"), qc);
        b.add_cost(zh, cost.c_z);
        b.add_cost(pc, cost.c_p - cost.c_l);
        // P_c ≥ 0
        let nonneg = b.block(Cone::Nonneg(1));
        b.equality(&[(nonneg, 1.0), (pc, -1.0)], 0.0);

        // headroom e = presumed − P_c; apparent power (S, e, Q) ∈ SOC
        let cap = b.block(Cone::Soc(3));
        let s_pu = inv.s_rating / sb;
        b.equality(&[(cap, 1.0)], s_pu);
        b.equality(&[(cap + 2, 1.0), (qc, -1.0)], 0.0);
        let e = cap + 1;
        match (&known, &mut d_vars) {
            (Some(pav), _) => {
                b.equality(&[(e, 1.0), (pc, 1.0)], pav[h]);
                b.add_offset(cost.c_l * pav[h]);
            }
            (None, Some(dv)) => {
                let d = b.scalar(false);
                let _ = b.name(format!("d[{h}]"), d);
                dv.push(d);
                b.equality(&[(e, 1.0), (pc, 1.0), (d, -1.0)], 0.0);
                b.add_cost(d, cost.c_l);
                let (set, _) = risk.unwrap();
                let (lo, hi) = set.support_box[h];
                if hi - lo <= 1e-9 * hi.abs().max(1.0) {
                    b.equality(&[(d, 1.0)], lo / sb);
                } else {
                    b.greater_equal(&[(d, 1.0)], lo / sb);
                    b.less_equal(&[(d, 1.0)], hi / sb);
                }
            }
            _ => unreachable!(),
        }
        // power-factor wedge |Q| ≤ tanθ·e, or plain e ≥ 0 when disabled
        if inv.min_pf_angle < std::f64::consts::FRAC_PI_2 - 1e-12 {
            let t = inv.min_pf_angle.tan();
            b.greater_equal(&[(e, t), (qc, -1.0)], 0.0);
            b.greater_equal(&[(e, t), (qc, 1.0)], 0.0);
        } else {
            b.greater_equal(&[(e, 1.0)], 0.0);
        }

        // balance at the house: Tr(A V) = presumed − P_c − P_ℓ, Tr(B V) = Q_c − Q_ℓ
        let load = &feeder.nodes[node];
        let (mut pt, mut qt) = v.injection_terms(&y, node);
        pt.push((pc, 1.0));
        qt.push((qc, -1.0));
        match (&known, &d_vars) {
            (Some(pav), _) => {
                b.equality(&pt, pav[h] - load.load_w / sb);
            }
            (None, Some(dv)) => {
                pt.push((dv[h], -1.0));
                b.equality(&pt, -load.load_w / sb);
            }
            _ => unreachable!(),
        }
        b.equality(&qt, -load.load_var / sb);
        b.add_offset(-cost.c_l * load.load_w / sb);
        p_c.push(pc);
        q_c.push(qc);
        z.push(zh);
    }

    // nodes without an inverter: fixed injection (zero at poles, minus the load at houses)
    for node in 1..dim {
        if feeder.nodes[node].inverter.is_some() {
            continue;
        }
        let load = &feeder.nodes[node];
        let (pt, qt) = v.injection_terms(&y, node);
        b.equality(&pt, -load.load_w / sb);
        b.equality(&qt, -load.load_var / sb);
        b.add_offset(-cost.c_l * load.load_w / sb);
    }

    // slack injection P₀ = Tr(A₀V) completes the loss term
    let (p0, _) = v.injection_terms(&y, 0);
    for (var, c) in p0 {
        b.add_cost(var, cost.c_l * c);
    }

    // voltage window and slack pin
    let d0 = v.diag(0);
    b.equality(&[d0], vlim.v_slack * vlim.v_slack);
    for node in 1..dim {
        let dn = v.diag(node);
        b.greater_equal(&[dn], vlim.v_min * vlim.v_min);
        b.less_equal(&[dn], vlim.v_max * vlim.v_max);
    }

    // CVaR epigraph: Σ_h u_sh ≤ α + y_s, p_sh − d_h ≤ u_sh, u, y ≥ 0
    let (mut alpha, mut ys, mut us) = (None, None, None);
    if let (Some((set, beta)), Some(dv)) = (risk, &d_vars) {
        if cost.c_r > 0.0 {
            let s = set.len();
            let a = b.scalar(false);
            let _ = b.name("alpha", a);
            b.add_cost(a, cost.c_r);
            let yb = b.block(Cone::Nonneg(s));
            let ub = b.block(Cone::Nonneg(s * nh));
            let slack_sum = b.block(Cone::Nonneg(s));
            let slack_u = b.block(Cone::Nonneg(s * nh));
            let w = cost.c_r / (s as f64 * (1.0 - beta));
            for si in 0..s {
                let _ = b.name(format!("y[{si}]"), yb + si);
                b.add_cost(yb + si, w);
                let mut row: Vec<Term> = (0..nh).map(|h| (ub + si * nh + h, 1.0)).collect();
                row.extend([(a, -1.0), (yb + si, -1.0), (slack_sum + si, 1.0)]);
                b.equality(&row, 0.0);
                for h in 0..nh {
                    let u = ub + si * nh + h;
                    let _ = b.name(format!("u[{si},{h}]"), u);
                    b.equality(&[(u, 1.0), (dv[h], 1.0), (slack_u + si * nh + h, -1.0)], set.samples[si][h] / sb);
                }
            }
            alpha = Some(a);
            ys = Some(yb);
            us = Some(ub);
        }
    }

    let mut layout = Layout { v, houses: invs.iter().map(|(n, _)| *n).collect(), p_c, q_c, z, d: d_vars, alpha, y: ys, u: us, fairness: None };
    if cost.fairness_weight > 0.0 {
        layout.fairness = Some(add_fairness(&mut b, &layout.p_c, cost.fairness_weight));
    }
    Ok(OidProblem { conic: b.build(), layout, instance: inst })
}
