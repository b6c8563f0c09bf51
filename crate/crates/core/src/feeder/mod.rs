//! Balanced single-phase distribution feeder: topology, line impedances, the bus
//! admittance matrix, and the per-node Hermitian matrices that express injections and
//! voltage magnitudes as linear functions of the outer product `V = v vᴴ`.

mod fishbone;
mod io;

use std::collections::{BTreeSet, VecDeque};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fishbone::{fishbone, FishboneParams};
pub use io::{load_feeder, parse_feeder, save_feeder, FeederFile};

#[derive(Debug, Error)]
pub enum FeederError {
    #[error("feeder graph is disconnected ({reached} of {total} nodes reachable from node 0)")]
    DisconnectedGraph { reached: usize, total: usize },
    #[error("line {from}-{to} has zero impedance")]
    ZeroImpedance { from: usize, to: usize },
    #[error("line {from}-{to} appears more than once")]
    DuplicateEdge { from: usize, to: usize },
    #[error("line {from}-{to} has negative resistance")]
    NegativeResistance { from: usize, to: usize },
    #[error("line {from}-{to} references a missing node")]
    UnknownNode { from: usize, to: usize },
    #[error("node index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("node indices must be 0..N in order; found {found} at position {position}")]
    NodeOrder { position: usize, found: usize },
    #[error("node 0 must be the transformer")]
    SlackNotTransformer,
    #[error("node {0}: {1}")]
    InvalidNode(usize, &'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Transformer,
    Pole,
    House,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverterSpec {
    /// Apparent-power rating, VA.
    pub s_rating: f64,
    /// Minimum power-factor angle in radians; `π/2` disables the cut.
    pub min_pf_angle: f64,
    /// DC nameplate, W.
    pub dc_rating: f64,
    /// DC-to-AC derating factor.
    pub derate: f64,
}

impl InverterSpec {
    /// AC output limit, W.
    pub fn ac_rating(&self) -> f64 {
        self.dc_rating * self.derate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub index: usize,
    pub kind: NodeKind,
    /// Constant-power load, W.
    pub load_w: f64,
    /// Constant-power load, var.
    pub load_var: f64,
    pub inverter: Option<InverterSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSpec {
    pub from: usize,
    pub to: usize,
    /// Series impedance, Ω.
    pub impedance: Complex64,
    /// Shunt admittance at each end of the π model, S.
    pub shunt: Complex64,
    /// Physical length, m (used for spatial correlation of forecast errors).
    pub length_m: f64,
}

/// Per-unit base; all solver-facing quantities are normalized by it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerUnitBase {
    pub s_va: f64,
    pub v_v: f64,
}

impl Default for PerUnitBase {
    fn default() -> Self {
        Self { s_va: 10_000.0, v_v: 240.0 }
    }
}

impl PerUnitBase {
    pub fn z_ohm(&self) -> f64 {
        self.v_v * self.v_v / self.s_va
    }
}

/// Raw description of a feeder, before the admittance matrix is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeederSpec {
    pub nodes: Vec<NodeSpec>,
    pub lines: Vec<LineSpec>,
    pub base: PerUnitBase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeederModel {
    pub nodes: Vec<NodeSpec>,
    pub edges: Vec<LineSpec>,
    /// Bus admittance matrix in siemens.
    pub admittance: DMatrix<Complex64>,
    pub slack_node: usize,
    pub radial: bool,
    pub base: PerUnitBase,
}

/// Hermitian matrices with `Tr(A V) = Re{V_n I_n*}`, `Tr(B V) = Im{V_n I_n*}`, `Tr(M V) = |V_n|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeMatrices {
    pub a: DMatrix<Complex64>,
    pub b: DMatrix<Complex64>,
    pub m: DMatrix<Complex64>,
}

fn check_lines(n: usize, lines: &[LineSpec]) -> Result<(), FeederError> {
    let mut seen = BTreeSet::new();
    for l in lines {
        let (from, to) = (l.from, l.to);
        if from >= n || to >= n || from == to {
            return Err(FeederError::UnknownNode { from, to });
        }
        if l.impedance.norm() == 0.0 {
            return Err(FeederError::ZeroImpedance { from, to });
        }
        if l.impedance.re < 0.0 {
            return Err(FeederError::NegativeResistance { from, to });
        }
        if !seen.insert((from.min(to), from.max(to))) {
            return Err(FeederError::DuplicateEdge { from, to });
        }
    }
    Ok(())
}

/// Nodes reachable from node 0.
fn reachable(n: usize, lines: &[LineSpec]) -> usize {
    if n == 0 {
        return 0;
    }
    let adj = adjacency(n, lines);
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &(v, _) in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count
}

fn adjacency(n: usize, lines: &[LineSpec]) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); n];
    for (k, l) in lines.iter().enumerate() {
        if l.from < n && l.to < n {
            adj[l.from].push((l.to, k));
            adj[l.to].push((l.from, k));
        }
    }
    adj
}

fn check_nodes(nodes: &[NodeSpec]) -> Result<(), FeederError> {
    for (pos, node) in nodes.iter().enumerate() {
        if node.index != pos {
            return Err(FeederError::NodeOrder { position: pos, found: node.index });
        }
        if node.kind != NodeKind::House {
            if node.load_w != 0.0 || node.load_var != 0.0 {
                return Err(FeederError::InvalidNode(pos, "only houses may carry load"));
            }
            if node.inverter.is_some() {
                return Err(FeederError::InvalidNode(pos, "only houses may carry an inverter"));
            }
        }
        if let Some(inv) = node.inverter {
            if !(inv.s_rating > 0.0) {
                return Err(FeederError::InvalidNode(pos, "inverter rating must be positive"));
            }
            if !(inv.min_pf_angle > 0.0 && inv.min_pf_angle <= std::f64::consts::FRAC_PI_2) {
                return Err(FeederError::InvalidNode(pos, "power-factor angle must lie in (0, π/2]"));
            }
        }
    }
    if nodes.first().is_some_and(|n| n.kind != NodeKind::Transformer) {
        return Err(FeederError::SlackNotTransformer);
    }
    Ok(())
}

/// Assembles `Y` with `Y[m][n] = −1/z_mn` and `Y[n][n] = Σ 1/z + shunts`.
pub fn build_admittance(spec: &FeederSpec) -> Result<FeederModel, FeederError> {
    let n = spec.nodes.len();
    check_nodes(&spec.nodes)?;
    check_lines(n, &spec.lines)?;
    let reached = reachable(n, &spec.lines);
    if reached != n {
        return Err(FeederError::DisconnectedGraph { reached, total: n });
    }
    let mut y = DMatrix::<Complex64>::zeros(n, n);
    for l in &spec.lines {
        let g = l.impedance.inv();
        y[(l.from, l.to)] -= g;
        y[(l.to, l.from)] -= g;
        y[(l.from, l.from)] += g + l.shunt;
        y[(l.to, l.to)] += g + l.shunt;
    }
    debug_assert!((&y - y.transpose()).norm() <= 1e-12 * (1.0 + y.norm()));
    Ok(FeederModel {
        nodes: spec.nodes.clone(),
        edges: spec.lines.clone(),
        admittance: y,
        slack_node: 0,
        radial: n > 0 && spec.lines.len() == n - 1,
        base: spec.base,
    })
}

impl FeederModel {
    /// Number of non-slack nodes `N` (the matrix dimension is `N + 1`).
    pub fn n(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    /// Admittance in per unit of the feeder's base.
    pub fn admittance_pu(&self) -> DMatrix<Complex64> {
        self.admittance.map(|v| v * self.base.z_ohm())
    }

    /// Node indices of houses with inverters, in index order (the set H).
    pub fn inverter_nodes(&self) -> Vec<usize> {
        self.nodes.iter().filter(|n| n.inverter.is_some()).map(|n| n.index).collect()
    }

    /// Node indices of houses, in index order.
    pub fn house_nodes(&self) -> Vec<usize> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::House).map(|n| n.index).collect()
    }

    pub fn pole_nodes(&self) -> Vec<usize> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Pole).map(|n| n.index).collect()
    }

    pub fn spec(&self) -> FeederSpec {
        FeederSpec { nodes: self.nodes.clone(), lines: self.edges.clone(), base: self.base }
    }

    /// Parent of every node in a BFS tree rooted at the slack, with the connecting edge.
    pub fn bfs_tree(&self) -> Vec<Option<(usize, usize)>> {
        let n = self.dim();
        let adj = adjacency(n, &self.edges);
        let mut parent = vec![None; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &(v, e) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = Some((u, e));
                    queue.push_back(v);
                }
            }
        }
        parent
    }

    /// Nodes in BFS order from the slack.
    pub fn bfs_order(&self) -> Vec<usize> {
        let n = self.dim();
        let adj = adjacency(n, &self.edges);
        let mut seen = vec![false; n];
        let mut order = vec![0];
        seen[0] = true;
        let mut k = 0;
        while k < order.len() {
            let u = order[k];
            k += 1;
            for &(v, _) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    order.push(v);
                }
            }
        }
        order
    }

    /// Shortest-path distances (m) along lines between the given nodes.
    pub fn path_distances(&self, which: &[usize]) -> Vec<Vec<f64>> {
        let n = self.dim();
        let adj = adjacency(n, &self.edges);
        which
            .iter()
            .map(|&src| {
                // Dijkstra; feeders are small
                let mut dist = vec![f64::INFINITY; n];
                let mut done = vec![false; n];
                dist[src] = 0.0;
                for _ in 0..n {
                    let u = (0..n).filter(|&i| !done[i]).min_by(|&a, &b| dist[a].total_cmp(&dist[b]));
                    let Some(u) = u else { break };
                    done[u] = true;
                    for &(v, e) in &adj[u] {
                        let nd = dist[u] + self.edges[e].length_m;
                        if nd < dist[v] {
                            dist[v] = nd;
                        }
                    }
                }
                which.iter().map(|&t| dist[t]).collect()
            })
            .collect()
    }
}

/// Per-node matrices built from an arbitrary admittance matrix (SI or per unit).
pub fn node_matrices_of(y: &DMatrix<Complex64>, n: usize) -> Result<NodeMatrices, FeederError> {
    let dim = y.nrows();
    if n >= dim {
        return Err(FeederError::IndexOutOfRange(n));
    }
    let mut yn = DMatrix::<Complex64>::zeros(dim, dim);
    yn.set_row(n, &y.row(n));
    let ynh = yn.adjoint();
    let a = (&yn + &ynh).map(|v| v * 0.5);
    let b = (&yn - &ynh).map(|v| v * Complex64::new(0.0, 0.5));
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    m[(n, n)] = Complex64::new(1.0, 0.0);
    Ok(NodeMatrices { a, b, m })
}

pub fn node_matrices(feeder: &FeederModel, n: usize) -> Result<NodeMatrices, FeederError> {
    node_matrices_of(&feeder.admittance, n)
}

/// `Tr(M V)` for Hermitian `M` and `V = v vᴴ`, i.e. `vᴴ M v`.
pub fn quadratic_form(m: &DMatrix<Complex64>, v: &[Complex64]) -> Complex64 {
    let dim = v.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..dim {
        for j in 0..dim {
            acc += v[i].conj() * m[(i, j)] * v[j];
        }
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub connected: bool,
    pub radial: bool,
    pub num_nodes: usize,
    pub num_lines: usize,
    /// |H|
    pub num_inverters: usize,
    /// |U|
    pub num_poles: usize,
    /// 2-norm condition number of `Y` with the slack row and column removed.
    pub condition_estimate: Option<f64>,
    pub findings: Vec<String>,
}

/// Reports connectivity, radiality, inverter and pole counts, and conditioning.
pub fn validate_feeder(spec: &FeederSpec) -> ValidationReport {
    let n = spec.nodes.len();
    let mut findings = Vec::new();
    if let Err(e) = check_nodes(&spec.nodes) {
        findings.push(e.to_string());
    }
    if let Err(e) = check_lines(n, &spec.lines) {
        findings.push(e.to_string());
    }
    let reached = reachable(n, &spec.lines);
    let connected = reached == n;
    if !connected {
        findings.push(FeederError::DisconnectedGraph { reached, total: n }.to_string());
    }
    let radial = n > 0 && spec.lines.len() == n - 1 && connected;
    let condition_estimate = if findings.is_empty() && n > 1 {
        build_admittance(spec).ok().and_then(|f| {
            let y = f.admittance_pu();
            let reduced = y.view((1, 1), (n - 1, n - 1)).into_owned();
            let sv = reduced.singular_values();
            let (lo, hi) = (sv.min(), sv.max());
            (lo > 0.0).then(|| hi / lo)
        })
    } else {
        None
    };
    ValidationReport {
        connected,
        radial,
        num_nodes: n,
        num_lines: spec.lines.len(),
        num_inverters: spec.nodes.iter().filter(|x| x.inverter.is_some()).count(),
        num_poles: spec.nodes.iter().filter(|x| x.kind == NodeKind::Pole).count(),
        condition_estimate,
        findings,
    }
}
