//! Daily dispatch as independent hourly solves, parameter sweeps over a day, and the
//! files both produce.

mod output;
mod sweep;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feeder::FeederModel;
use crate::formulation::{
    assemble_deterministic, assemble_risk_aware, recover, CostConfig, FormulationError, FormulationOptions,
    Relaxation, VoltageLimits,
};
use crate::par::{map_slice, Execution};
use crate::scenario::{sample_scenarios, ScenarioConfig, ScenarioError, ScenarioSet};
use crate::solver::{solve, SolveStatus, SolverError, SolverSettings};
use crate::validate::{house_injections, newton_power_flow, ValidateError, RANK_TOL};

pub use output::{read_hourly_totals, write_outputs, write_sweep_csv, CURTAILMENT_CSV, HOURLY_CSV, REPORT_JSON, SWEEP_CSV, VOLTAGE_CSV};
pub use sweep::{run_sweep, table_setups, SweepParam, SweepPoint, SweepTable, TableSetup, Trend, TREND_TOL};

/// Solver settings for dispatch. The power-flow check at [`NEWTON_TOL`] needs tighter
/// feasibility than the generic defaults give on admittances of order 10³ pu.
pub const DISPATCH_SOLVER: SolverSettings = SolverSettings {
    tol_gap: 1e-8,
    tol_feas: 1e-8,
    tol_infeas: 1e-8,
    max_iter: 200,
    step_fraction: 0.99,
    equilibrate: true,
};

/// Tighter settings for comparing optimal values across formulations. At
/// [`DISPATCH_SOLVER`] the objective itself is only good to about 1e-4 pu, because the
/// feasibility residual is relative to entries of order 10³.
pub const REFERENCE_SOLVER: SolverSettings = SolverSettings { tol_gap: 1e-10, tol_feas: 1e-10, ..DISPATCH_SOLVER };

/// Largest accepted gap between Newton and relaxation voltage magnitudes, pu.
pub const NEWTON_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum DispatchError {
    #[error("hour {hour}: solver finished with status {status}")]
    SolveFailed { hour: u32, status: SolveStatus },
    #[error("hour {hour}: power flow differs from the dispatch by {mismatch:e} pu")]
    ValidationFailed { hour: u32, mismatch: f64 },
    #[error("hour {0} is not in the scenario config")]
    UnknownHour(u32),
    #[error("a sweep needs at least two values")]
    TooFewValues,
    #[error("unknown sweep parameter `{0}`")]
    UnknownParam(String),
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Validate(#[from] ValidateError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Forecast means taken as the available power.
    Deterministic,
    #[default]
    Risk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormulationChoice {
    Sdp,
    Socp,
    /// SOCP on radial feeders, SDP otherwise.
    #[default]
    Auto,
}

impl FormulationChoice {
    pub fn resolve(self, feeder: &FeederModel) -> Relaxation {
        match self {
            FormulationChoice::Sdp => Relaxation::Sdp,
            FormulationChoice::Socp => Relaxation::Socp,
            FormulationChoice::Auto if feeder.radial => Relaxation::Socp,
            FormulationChoice::Auto => Relaxation::Sdp,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub feeder: FeederModel,
    /// Forecasts, loads and sampling settings (`S`, seed, β).
    pub scenario: ScenarioConfig,
    pub mode: Mode,
    /// Hours to solve; all hours of the scenario config when `None`.
    pub hours: Option<Vec<u32>>,
    pub cost: CostConfig,
    pub vlim: VoltageLimits,
    pub formulation: FormulationChoice,
    pub solver: SolverSettings,
    pub exec: Execution,
}

impl RunConfig {
    pub fn new(feeder: FeederModel, scenario: ScenarioConfig) -> Self {
        Self {
            feeder,
            scenario,
            mode: Mode::Risk,
            hours: None,
            cost: CostConfig::default(),
            vlim: VoltageLimits::default(),
            formulation: FormulationChoice::Auto,
            solver: DISPATCH_SOLVER,
            exec: Execution::Parallel,
        }
    }

    fn selected_hours(&self) -> Result<Vec<(usize, u32)>, DispatchError> {
        match &self.hours {
            None => Ok(self.scenario.hours.iter().copied().enumerate().collect()),
            Some(hs) => hs
                .iter()
                .map(|&h| {
                    self.scenario.hours.iter().position(|&x| x == h).map(|k| (k, h)).ok_or(DispatchError::UnknownHour(h))
                })
                .collect(),
        }
    }

    /// Feeder carrying the household demand of row `k`.
    pub fn feeder_at(&self, k: usize) -> FeederModel {
        let mut f = self.feeder.clone();
        let houses = f.inverter_nodes();
        if let Some(rows) = &self.scenario.loads_w {
            for (i, &n) in houses.iter().enumerate() {
                f.nodes[n].load_w = rows[k][i];
            }
        }
        if let Some(rows) = &self.scenario.loads_var {
            for (i, &n) in houses.iter().enumerate() {
                f.nodes[n].load_var = rows[k][i];
            }
        }
        f
    }

    /// Scenario set of row `k`; each hour draws from its own substream of the seed.
    pub fn scenarios_at(&self, k: usize, hour: u32) -> Result<ScenarioSet, DispatchError> {
        let dist = self.feeder.path_distances(&self.feeder.inverter_nodes());
        let model = self.scenario.forecast(k, &dist);
        let seed = self.scenario.seed ^ (u64::from(hour) << 40);
        Ok(sample_scenarios(&model, self.scenario.scenarios, seed, self.exec)?)
    }
}

/// Result of one hour. Powers in W / var, voltages in pu.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourResult {
    pub hour: u32,
    pub p_c: Vec<f64>,
    pub q_c: Vec<f64>,
    /// Presumed available power (the forecast in deterministic mode).
    pub d: Vec<f64>,
    pub selected: Vec<bool>,
    pub var: Option<f64>,
    pub cvar: Option<f64>,
    pub objective: f64,
    pub rank_ratio: f64,
    /// `rank_ratio ≤ RANK_TOL`: the voltages are physical and passed the power-flow check.
    pub exact: bool,
    /// Recovered voltage magnitudes per node.
    pub v: Vec<f64>,
    /// Max `| |v_pf| − |v| |` against Newton power flow at the dispatched injections;
    /// `None` if the power flow did not converge.
    pub newton_deviation: Option<f64>,
    /// Largest magnitude of that power flow.
    pub newton_max_v: Option<f64>,
    pub status: SolveStatus,
    pub gap: f64,
    pub iterations: usize,
}

impl HourResult {
    pub fn max_v(&self) -> f64 {
        self.v.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_v(&self) -> f64 {
        self.v.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn num_selected(&self) -> usize {
        self.selected.iter().filter(|s| **s).count()
    }
}

/// Energy totals over a set of hours (one-hour steps).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Totals {
    /// `Σ_t Σ_h P_c,h(t)`, kWh.
    pub p_c_kwh: f64,
    /// `Σ_t Σ_h |Q_c,h(t)|`, kvarh.
    pub q_c_kvarh: f64,
    /// `Σ_t |selected(t)|`.
    pub n_selected: usize,
    pub hours: usize,
}

impl Totals {
    pub fn over<'a>(rows: impl IntoIterator<Item = &'a HourResult>) -> Self {
        let (mut p, mut q, mut n, mut hours) = (0.0, 0.0, 0, 0);
        for r in rows {
            for h in 0..r.p_c.len() {
                p += r.p_c[h];
                q += r.q_c[h].abs();
            }
            n += r.num_selected();
            hours += 1;
        }
        Totals { p_c_kwh: p / 1000.0, q_c_kvarh: q / 1000.0, n_selected: n, hours }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchReport {
    pub mode: Mode,
    pub relaxation: Relaxation,
    /// Inverter node indices, in the order of the per-house vectors.
    pub houses: Vec<usize>,
    pub hours: Vec<HourResult>,
    /// Over every hour.
    pub totals: Totals,
    /// Over the exact hours only.
    pub exact_totals: Totals,
}

impl DispatchReport {
    fn new(mode: Mode, relaxation: Relaxation, houses: Vec<usize>, hours: Vec<HourResult>) -> Self {
        let totals = Totals::over(&hours);
        let exact_totals = Totals::over(hours.iter().filter(|r| r.exact));
        Self { mode, relaxation, houses, hours, totals, exact_totals }
    }

    pub fn totals_for(&self, hours: &[u32]) -> Totals {
        Totals::over(self.hours.iter().filter(|r| hours.contains(&r.hour)))
    }

    pub fn exact_hours(&self) -> Vec<u32> {
        self.hours.iter().filter(|r| r.exact).map(|r| r.hour).collect()
    }

    pub fn house_labels(&self) -> Vec<String> {
        (1..=self.houses.len()).map(|h| format!("H{h}")).collect()
    }
}

/// Largest differences between two runs over the same hours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportDiff {
    /// `|obj_a − obj_b| / (1 + |obj_a|)` over all hours.
    pub objective_rel: f64,
    /// Largest `P_c` or `Q_c` difference over hours exact in both runs, W / var.
    pub setpoint: f64,
    /// Hours compared for `setpoint`.
    pub exact_hours: usize,
}

pub fn compare_reports(a: &DispatchReport, b: &DispatchReport) -> ReportDiff {
    let mut diff = ReportDiff { objective_rel: 0.0, setpoint: 0.0, exact_hours: 0 };
    for ra in &a.hours {
        let Some(rb) = b.hours.iter().find(|r| r.hour == ra.hour) else {
            diff.objective_rel = f64::INFINITY;
            continue;
        };
        diff.objective_rel = diff.objective_rel.max((ra.objective - rb.objective).abs() / (1.0 + ra.objective.abs()));
        if ra.exact && rb.exact {
            diff.exact_hours += 1;
            let pairs = ra.p_c.iter().zip(&rb.p_c).chain(ra.q_c.iter().zip(&rb.q_c));
            diff.setpoint = pairs.fold(diff.setpoint, |m, (x, y)| m.max((x - y).abs()));
        }
    }
    diff
}

/// Solves every requested hour independently.
pub fn run_dispatch(config: &RunConfig) -> Result<DispatchReport, DispatchError> {
    config.scenario.validate(config.feeder.inverter_nodes().len())?;
    let hours = config.selected_hours()?;
    let relaxation = config.formulation.resolve(&config.feeder);
    let results = map_slice(config.exec, &hours, |&(k, hour)| solve_hour(config, k, hour, relaxation));
    let hours = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(DispatchReport::new(config.mode, relaxation, config.feeder.inverter_nodes(), hours))
}

/// One hour: assemble, solve, recover, and check exact solutions against Newton.
pub fn solve_hour(config: &RunConfig, k: usize, hour: u32, relaxation: Relaxation) -> Result<HourResult, DispatchError> {
    let feeder = config.feeder_at(k);
    let options = FormulationOptions { relaxation, selection_lmi: false };
    let problem = match config.mode {
        Mode::Deterministic => {
            assemble_deterministic(&feeder, &config.scenario.means_w[k], config.cost, config.vlim, options)?
        }
        Mode::Risk => {
            let set = config.scenarios_at(k, hour)?;
            assemble_risk_aware(&feeder, &set, config.cost, config.vlim, config.scenario.beta, options)?
        }
    };
    let sol = solve(&problem.conic, &config.solver)?;
    if sol.status != SolveStatus::Optimal {
        return Err(DispatchError::SolveFailed { hour, status: sol.status });
    }
    let ds = recover(&problem, &sol)?;
    let exact = ds.rank_ratio <= RANK_TOL;
    let v: Vec<f64> = ds.v.iter().map(|z| z.norm()).collect();

    let gen: Vec<f64> = ds.d.iter().zip(&ds.p_c).map(|(d, p)| d - p).collect();
    let (p, q) = house_injections(&feeder, &gen, &ds.q_c);
    let pf = newton_power_flow(&feeder, &p, &q, config.vlim.v_slack).ok();
    let newton_deviation =
        pf.as_ref().map(|pf| pf.voltages.iter().zip(&v).map(|(a, b)| (a.norm() - b).abs()).fold(0.0, f64::max));
    if exact {
        match newton_deviation {
            Some(dev) if dev <= NEWTON_TOL => {}
            other => return Err(DispatchError::ValidationFailed { hour, mismatch: other.unwrap_or(f64::INFINITY) }),
        }
    }
    let mut selected = vec![false; ds.p_c.len()];
    for &h in &ds.selected {
        selected[h] = true;
    }
    Ok(HourResult {
        hour,
        p_c: ds.p_c,
        q_c: ds.q_c,
        d: ds.d,
        selected,
        var: ds.alpha,
        cvar: ds.cvar,
        objective: ds.objective,
        rank_ratio: ds.rank_ratio,
        exact,
        v,
        newton_deviation,
        newton_max_v: pf.map(|pf| pf.voltages.iter().map(|z| z.norm()).fold(0.0, f64::max)),
        status: sol.status,
        gap: sol.gap,
        iterations: sol.iterations,
    })
}
