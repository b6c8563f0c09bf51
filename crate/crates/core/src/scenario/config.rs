use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{ForecastModel, ScenarioError, ScenarioSet};
use crate::feeder::FeederModel;

/// Hourly forecasts and sampling settings for a day of dispatch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Hour of day for each row below.
    pub hours: Vec<u32>,
    /// Forecast available power, `[hour][house]`, W.
    pub means_w: Vec<Vec<f64>>,
    /// Household demand, `[hour][house]`; the feeder's static loads apply when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loads_w: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loads_var: Option<Vec<Vec<f64>>>,
    /// `σ_h / P̄_h`.
    pub sigma_fraction: f64,
    pub tau_m: f64,
    pub scenarios: usize,
    pub seed: u64,
    pub beta: f64,
    pub truncation: (f64, f64),
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let cfg: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<(), ScenarioError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn validate(&self, houses: usize) -> Result<(), ScenarioError> {
        let t = self.hours.len();
        let check = |what, rows: &Vec<Vec<f64>>| -> Result<(), ScenarioError> {
            if rows.len() != t {
                return Err(ScenarioError::DimensionMismatch { what, got: rows.len(), expected: t });
            }
            match rows.iter().find(|r| r.len() != houses) {
                Some(r) => Err(ScenarioError::DimensionMismatch { what, got: r.len(), expected: houses }),
                None => Ok(()),
            }
        };
        check("means_w", &self.means_w)?;
        if let Some(l) = &self.loads_w {
            check("loads_w", l)?;
        }
        if let Some(l) = &self.loads_var {
            check("loads_var", l)?;
        }
        if !(self.sigma_fraction >= 0.0 && self.sigma_fraction.is_finite()) {
            return Err(ScenarioError::InvalidForecast("sigma_fraction must be nonnegative"));
        }
        if self.scenarios == 0 {
            return Err(ScenarioError::EmptyScenarioSet);
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(ScenarioError::BetaOutOfRange(self.beta));
        }
        Ok(())
    }

    /// Forecast model for row `k`, with house distances measured along the feeder.
    pub fn forecast(&self, k: usize, distances: &[Vec<f64>]) -> ForecastModel {
        let means = self.means_w[k].clone();
        ForecastModel {
            sigmas: means.iter().map(|m| m * self.sigma_fraction).collect(),
            means,
            distances: distances.to_vec(),
            tau: self.tau_m,
            truncation: self.truncation,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileParams {
    pub first_hour: u32,
    pub last_hour: u32,
    /// Peak forecast as a fraction of the AC rating.
    pub peak_fraction: f64,
    /// Mean household demand per hour starting at `first_hour`, W.
    pub base_load_w: Vec<f64>,
    pub load_sigma_w: f64,
    pub load_pf: f64,
    pub seed: u64,
}

impl Default for ProfileParams {
    fn default() -> Self {
        Self {
            first_hour: 6,
            last_hour: 20,
            peak_fraction: 0.85,
            base_load_w: vec![
                550.0, 620.0, 680.0, 720.0, 780.0, 850.0, 920.0, 1000.0, 1080.0, 1180.0, 1300.0, 1420.0, 1500.0,
                1450.0, 1350.0,
            ],
            load_sigma_w: 200.0,
            load_pf: 0.9,
            seed: 2014,
        }
    }
}

/// Synthetic clear-sky day: a sine-shaped PV forecast peaking at 1 PM and a perturbed
/// household demand profile.
pub fn daily_profile(feeder: &FeederModel, p: &ProfileParams) -> ScenarioConfig {
    let inverters: Vec<_> = feeder.inverter_nodes().iter().map(|&n| feeder.nodes[n].inverter.unwrap()).collect();
    let hours: Vec<u32> = (p.first_hour..=p.last_hour).collect();
    let means_w = hours
        .iter()
        .map(|&t| {
            let shape = (std::f64::consts::PI * (f64::from(t) - 5.5) / 15.0).sin().max(0.0).powf(1.3);
            inverters.iter().map(|inv| round_w(inv.ac_rating() * p.peak_fraction * shape)).collect()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    // truncated at the same ±2.75σ used for forecast errors
    let zmax = 2.7478;
    let q_ratio = p.load_pf.acos().tan();
    let loads_w: Vec<Vec<f64>> = hours
        .iter()
        .enumerate()
        .map(|(k, _)| {
            let base = p.base_load_w[k % p.base_load_w.len()];
            (0..inverters.len())
                .map(|_| {
                    let z: f64 = loop {
                        let z: f64 = rng.sample(StandardNormal);
                        if z.abs() <= zmax {
                            break z;
                        }
                    };
                    round_w((base + p.load_sigma_w * z).max(50.0))
                })
                .collect()
        })
        .collect();
    let loads_var = loads_w.iter().map(|row| row.iter().map(|l| round_w(l * q_ratio)).collect()).collect();
    ScenarioConfig {
        hours,
        means_w,
        loads_w: Some(loads_w),
        loads_var: Some(loads_var),
        sigma_fraction: 0.1,
        tau_m: 300.0,
        scenarios: 200,
        seed: p.seed,
        beta: 0.95,
        truncation: (0.3, 99.7),
    }
}

fn round_w(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

/// One row per scenario, one column per house.
pub fn write_samples_csv<W: Write>(set: &ScenarioSet, labels: &[String], out: W) -> Result<(), ScenarioError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["scenario".to_string()];
    header.extend(labels.iter().cloned());
    w.write_record(&header)?;
    for (s, row) in set.samples.iter().enumerate() {
        let mut rec = vec![s.to_string()];
        rec.extend(row.iter().map(|x| format!("{x:.6}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feeder::{build_admittance, fishbone, FishboneParams};

    #[test]
    fn profile_shape() {
        let f = build_admittance(&fishbone(&FishboneParams::default())).unwrap();
        let cfg = daily_profile(&f, &ProfileParams::default());
        cfg.validate(20).unwrap();
        assert_eq!(cfg.hours.len(), 15);
        let noon = cfg.hours.iter().position(|&h| h == 13).unwrap();
        let peak = &cfg.means_w[noon];
        assert!(cfg.means_w.iter().all(|row| row.iter().zip(peak).all(|(a, b)| a <= b)));
        assert_eq!(cfg, daily_profile(&f, &ProfileParams::default()));
    }

    #[test]
    fn csv_layout() {
        let set = ScenarioSet::at_mean(&[1.0, 2.5]);
        let mut buf = Vec::new();
        write_samples_csv(&set, &["H1".into(), "H2".into()], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "scenario,H1,H2\n0,1.000000,2.500000\n");
    }
}
