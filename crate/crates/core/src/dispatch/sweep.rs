use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{run_dispatch, DispatchError, DispatchReport, RunConfig, Totals};
use crate::formulation::CostConfig;
use crate::par::map_slice;

/// Slack on energy totals when judging monotonicity, kWh (or kvarh).
pub const TREND_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "c_R")]
    RiskWeight,
    #[serde(rename = "beta")]
    Beta,
    #[serde(rename = "sigma_fraction")]
    SigmaFraction,
    #[serde(rename = "c_z")]
    SelectionWeight,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::RiskWeight => "c_R",
            SweepParam::Beta => "beta",
            SweepParam::SigmaFraction => "sigma_fraction",
            SweepParam::SelectionWeight => "c_z",
        }
    }

    pub fn apply(self, config: &mut RunConfig, value: f64) {
        match self {
            SweepParam::RiskWeight => config.cost.c_r = value,
            SweepParam::Beta => config.scenario.beta = value,
            SweepParam::SigmaFraction => config.scenario.sigma_fraction = value,
            SweepParam::SelectionWeight => config.cost.c_z = value,
        }
    }
}

impl FromStr for SweepParam {
    type Err = DispatchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "c_R" | "c_r" => Ok(SweepParam::RiskWeight),
            "beta" => Ok(SweepParam::Beta),
            "sigma_fraction" | "sigma" => Ok(SweepParam::SigmaFraction),
            "c_z" => Ok(SweepParam::SelectionWeight),
            other => Err(DispatchError::UnknownParam(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub report: DispatchReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub param: SweepParam,
    pub points: Vec<SweepPoint>,
}

/// Whether each total is nondecreasing along the sweep, judged over `hours`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    /// Hours exact at every sweep point.
    pub hours: Vec<u32>,
    pub totals: Vec<Totals>,
    pub p_c: bool,
    pub q_c: bool,
    pub n: bool,
}

impl Trend {
    pub fn holds(&self) -> bool {
        self.p_c && self.q_c && self.n
    }

    /// Whether any compared total is distinguishable from zero, i.e. the trend says
    /// something about provisioned services.
    pub fn informative(&self) -> bool {
        self.totals.iter().any(|t| t.p_c_kwh > TREND_TOL || t.q_c_kvarh > TREND_TOL || t.n_selected > 0)
    }
}

impl SweepTable {
    /// Hours whose solution is exact at every point of the sweep.
    pub fn common_exact_hours(&self) -> Vec<u32> {
        let Some(first) = self.points.first() else { return Vec::new() };
        first
            .report
            .exact_hours()
            .into_iter()
            .filter(|h| self.points.iter().all(|p| p.report.hours.iter().any(|r| r.hour == *h && r.exact)))
            .collect()
    }

    /// Monotonicity over the hours exact throughout; inexact rows never enter a trend.
    pub fn trend(&self) -> Trend {
        let hours = self.common_exact_hours();
        let totals: Vec<Totals> = self.points.iter().map(|p| p.report.totals_for(&hours)).collect();
        let up = |f: &dyn Fn(&Totals) -> f64, tol: f64| totals.windows(2).all(|w| f(&w[1]) >= f(&w[0]) - tol);
        Trend {
            p_c: up(&|t| t.p_c_kwh, TREND_TOL),
            q_c: up(&|t| t.q_c_kvarh, TREND_TOL),
            n: up(&|t| t.n_selected as f64, 0.0),
            hours,
            totals,
        }
    }
}

/// One full dispatch per value with everything else, including the seed, held fixed.
pub fn run_sweep(config: &RunConfig, param: SweepParam, values: &[f64]) -> Result<SweepTable, DispatchError> {
    if values.len() < 2 {
        return Err(DispatchError::TooFewValues);
    }
    let reports = map_slice(config.exec, values, |&value| {
        let mut c = config.clone();
        param.apply(&mut c, value);
        run_dispatch(&c)
    });
    let points = values
        .iter()
        .zip(reports)
        .map(|(&value, r)| r.map(|report| SweepPoint { value, report }))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepTable { param, points })
}

/// One of the three case-study sweeps: a parameter varied over a grid with the other
/// settings fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct TableSetup {
    pub name: &'static str,
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub cost: CostConfig,
    pub beta: f64,
    pub sigma_fraction: f64,
}

impl TableSetup {
    /// `base` with this table's fixed settings applied.
    pub fn config(&self, base: &RunConfig) -> RunConfig {
        let mut c = base.clone();
        c.cost = self.cost;
        c.scenario.beta = self.beta;
        c.scenario.sigma_fraction = self.sigma_fraction;
        c
    }
}

/// Risk weight, probability level, and forecast-error sweeps of the case study.
pub fn table_setups() -> Vec<TableSetup> {
    let risk = CostConfig { c_l: 1.0, c_p: 0.5, c_z: 0.9, c_r: 1.0, fairness_weight: 0.0 };
    let level = CostConfig { c_p: 1.0, ..risk };
    vec![
        TableSetup {
            name: "risk weight",
            param: SweepParam::RiskWeight,
            values: vec![0.01, 0.1, 1.0, 10.0],
            cost: risk,
            beta: 0.95,
            sigma_fraction: 0.1,
        },
        TableSetup {
            name: "probability level",
            param: SweepParam::Beta,
            values: vec![0.85, 0.90, 0.95, 0.99],
            cost: level,
            beta: 0.95,
            sigma_fraction: 0.1,
        },
        TableSetup {
            name: "forecast error",
            param: SweepParam::SigmaFraction,
            values: vec![0.0, 0.05, 0.10, 0.15, 0.20],
            cost: level,
            beta: 0.95,
            sigma_fraction: 0.1,
        },
    ]
}
