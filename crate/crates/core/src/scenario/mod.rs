//! Correlated forecast-error scenarios for available PV power, and the empirical surplus,
//! VaR and CVaR quantities computed from them. Everything here is in watts.

mod config;
mod risk;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::par::{map_indexed, Execution};

pub use config::{daily_profile, write_samples_csv, ProfileParams, ScenarioConfig};
pub use risk::{empirical_cvar, r_hat, r_hat_of, surplus, CvarEstimate, Surplus};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("covariance is not positive semidefinite (min eigenvalue {min_eig:e}, trace {trace:e})")]
    NonPsdCovariance { min_eig: f64, trace: f64 },
    #[error("truncation percentiles must satisfy 0 < lo < 50 < hi < 100, got ({0}, {1})")]
    InvalidTruncation(f64, f64),
    #[error("invalid forecast: {0}")]
    InvalidForecast(&'static str),
    #[error("{what}: length {got}, expected {expected}")]
    DimensionMismatch { what: &'static str, got: usize, expected: usize },
    #[error("beta {0} outside the admissible range")]
    BetaOutOfRange(f64),
    #[error("no samples")]
    EmptySamples,
    #[error("scenario set is empty")]
    EmptyScenarioSet,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Eigenvalues below this fraction of the trace are treated as a genuine error rather
/// than round-off in user-supplied distances.
const PSD_REJECT: f64 = 1e-3;
const PSD_WARN: f64 = 1e-10;
/// Whole-vector redraws before falling back to clipping.
const MAX_ATTEMPTS: usize = 100;
/// Scenarios per RNG substream.
const BLOCK: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastModel {
    pub means: Vec<f64>,
    pub sigmas: Vec<f64>,
    /// Pairwise distances, m.
    pub distances: Vec<Vec<f64>>,
    pub tau: f64,
    /// Lower and upper truncation percentiles.
    pub truncation: (f64, f64),
}

impl ForecastModel {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let h = self.means.len();
        if self.sigmas.len() != h {
            return Err(ScenarioError::DimensionMismatch { what: "sigmas", got: self.sigmas.len(), expected: h });
        }
        if self.distances.len() != h || self.distances.iter().any(|r| r.len() != h) {
            return Err(ScenarioError::DimensionMismatch { what: "distances", got: self.distances.len(), expected: h });
        }
        if self.means.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(ScenarioError::InvalidForecast("means must be finite and nonnegative"));
        }
        if self.sigmas.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(ScenarioError::InvalidForecast("sigmas must be finite and nonnegative"));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(ScenarioError::InvalidForecast("tau must be positive"));
        }
        for i in 0..h {
            for j in 0..h {
                let d = self.distances[i][j];
                if !(d >= 0.0) || d != self.distances[j][i] {
                    return Err(ScenarioError::InvalidForecast("distances must be symmetric and nonnegative"));
                }
            }
        }
        let (lo, hi) = self.truncation;
        if !(lo > 0.0 && lo < 50.0 && hi > 50.0 && hi < 100.0) {
            return Err(ScenarioError::InvalidTruncation(lo, hi));
        }
        Ok(())
    }

    /// `Σ_hh' = σ_h σ_h' exp(−d(h, h')/τ)`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let h = self.means.len();
        DMatrix::from_fn(h, h, |i, j| self.sigmas[i] * self.sigmas[j] * (-self.distances[i][j] / self.tau).exp())
    }

    /// Standard-normal quantiles of the truncation percentiles.
    fn z_bounds(&self) -> (f64, f64) {
        let n = Normal::standard();
        (n.inverse_cdf(self.truncation.0 / 100.0), n.inverse_cdf(self.truncation.1 / 100.0))
    }

    /// Per-house `[lo, hi]` box containing every sample.
    pub fn support_box(&self) -> Vec<(f64, f64)> {
        let (zl, zh) = self.z_bounds();
        self.means
            .iter()
            .zip(&self.sigmas)
            .map(|(m, s)| ((m + s * zl).max(0.0), m + s * zh))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    /// `samples[s][h]`, W.
    pub samples: Vec<Vec<f64>>,
    pub support_box: Vec<(f64, f64)>,
    pub means: Vec<f64>,
    pub seed: u64,
}

impl ScenarioSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn houses(&self) -> usize {
        self.means.len()
    }

    /// A single scenario equal to the forecast mean, with a degenerate support box.
    pub fn at_mean(means: &[f64]) -> Self {
        Self {
            samples: vec![means.to_vec()],
            support_box: means.iter().map(|&m| (m, m)).collect(),
            means: means.to_vec(),
            seed: 0,
        }
    }
}

/// Factor of the correlation matrix restricted to houses with `σ > 0`.
struct CorrelationFactor {
    active: Vec<usize>,
    /// `L` with `L Lᵀ = C`.
    factor: DMatrix<f64>,
}

fn correlation_factor(model: &ForecastModel) -> Result<CorrelationFactor, ScenarioError> {
    let active: Vec<usize> = (0..model.means.len()).filter(|&h| model.sigmas[h] > 0.0).collect();
    let k = active.len();
    if k == 0 {
        return Ok(CorrelationFactor { active, factor: DMatrix::zeros(0, 0) });
    }
    let corr = DMatrix::from_fn(k, k, |i, j| (-model.distances[active[i]][active[j]] / model.tau).exp());
    let eig = SymmetricEigen::new(corr);
    let trace = k as f64;
    let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min_eig < -PSD_REJECT * trace {
        return Err(ScenarioError::NonPsdCovariance { min_eig, trace });
    }
    if min_eig < -PSD_WARN * trace {
        log::warn!("covariance has eigenvalue {min_eig:e}; clipping negative eigenvalues to zero");
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let factor = &eig.eigenvectors * DMatrix::from_diagonal(&roots);
    Ok(CorrelationFactor { active, factor })
}

fn draw_one(rng: &mut ChaCha8Rng, model: &ForecastModel, cf: &CorrelationFactor, zl: f64, zh: f64) -> Vec<f64> {
    let k = cf.active.len();
    let mut std = vec![0.0; k];
    for attempt in 0..MAX_ATTEMPTS {
        let z: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        for (i, out) in std.iter_mut().enumerate() {
            *out = (0..k).map(|j| cf.factor[(i, j)] * z[j]).sum();
        }
        if std.iter().all(|&x| (zl..=zh).contains(&x)) {
            break;
        }
        if attempt + 1 == MAX_ATTEMPTS {
            std.iter_mut().for_each(|x| *x = x.clamp(zl, zh));
        }
    }
    let mut p = model.means.clone();
    for (i, &h) in cf.active.iter().enumerate() {
        p[h] = (model.means[h] + model.sigmas[h] * std[i]).max(0.0);
    }
    p
}

/// Draws `count` scenarios. Scenario blocks use independent ChaCha substreams of `seed`,
/// so the result does not depend on `exec`.
pub fn sample_scenarios(
    model: &ForecastModel,
    count: usize,
    seed: u64,
    exec: Execution,
) -> Result<ScenarioSet, ScenarioError> {
    model.validate()?;
    if count == 0 {
        return Err(ScenarioError::EmptyScenarioSet);
    }
    let cf = correlation_factor(model)?;
    let (zl, zh) = model.z_bounds();
    let blocks = count.div_ceil(BLOCK);
    let chunks = map_indexed(exec, blocks, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let n = BLOCK.min(count - b * BLOCK);
        (0..n).map(|_| draw_one(&mut rng, model, &cf, zl, zh)).collect::<Vec<_>>()
    });
    Ok(ScenarioSet {
        samples: chunks.into_iter().flatten().collect(),
        support_box: model.support_box(),
        means: model.means.clone(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(means: Vec<f64>, sigma_frac: f64, d: f64) -> ForecastModel {
        let h = means.len();
        ForecastModel {
            sigmas: means.iter().map(|m| m * sigma_frac).collect(),
            means,
            distances: (0..h).map(|i| (0..h).map(|j| if i == j { 0.0 } else { d }).collect()).collect(),
            tau: 300.0,
            truncation: (0.3, 99.7),
        }
    }

    #[test]
    fn zero_sigma_gives_mean() {
        let m = model(vec![1000.0, 2000.0, 0.0], 0.0, 50.0);
        let s = sample_scenarios(&m, 10, 1, Execution::Sequential).unwrap();
        assert!(s.samples.iter().all(|p| p == &m.means));
        assert_eq!(s.support_box, vec![(1000.0, 1000.0), (2000.0, 2000.0), (0.0, 0.0)]);
    }

    #[test]
    fn deterministic_and_execution_independent() {
        let m = model(vec![1000.0, 2000.0, 3000.0], 0.1, 40.0);
        let a = sample_scenarios(&m, 300, 7, Execution::Parallel).unwrap();
        let b = sample_scenarios(&m, 300, 7, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        let c = sample_scenarios(&m, 300, 8, Execution::Sequential).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn samples_inside_support() {
        let m = model(vec![100.0, 2000.0, 50.0, 4000.0], 0.4, 10.0);
        let s = sample_scenarios(&m, 2000, 3, Execution::Parallel).unwrap();
        for p in &s.samples {
            for (x, (lo, hi)) in p.iter().zip(&s.support_box) {
                assert!(*x >= *lo - 1e-9 && *x <= *hi + 1e-9 && *x >= 0.0);
            }
        }
    }

    #[test]
    fn coincident_houses_fully_correlated() {
        let mut m = model(vec![10.0, 10.0], 0.0, 0.0);
        m.sigmas = vec![1.0, 1.0];
        let s = sample_scenarios(&m, 100_000, 11, Execution::Parallel).unwrap();
        let n = s.len() as f64;
        let mean = |h: usize| s.samples.iter().map(|p| p[h]).sum::<f64>() / n;
        let (m0, m1) = (mean(0), mean(1));
        let cov = s.samples.iter().map(|p| (p[0] - m0) * (p[1] - m1)).sum::<f64>() / n;
        let var = |h: usize, m: f64| s.samples.iter().map(|p| (p[h] - m).powi(2)).sum::<f64>() / n;
        let corr = cov / (var(0, m0) * var(1, m1)).sqrt();
        assert!(corr >= 0.99, "{corr}");
    }

    #[test]
    fn invalid_inputs() {
        let mut m = model(vec![1.0], 0.1, 0.0);
        m.truncation = (60.0, 99.0);
        assert!(matches!(m.validate(), Err(ScenarioError::InvalidTruncation(..))));
        let mut m = model(vec![1.0, 1.0, 1.0], 0.1, 0.0);
        // violates the triangle inequality badly enough to break PSD
        m.distances = vec![vec![0.0, 0.0, 1e6], vec![0.0, 0.0, 0.0], vec![1e6, 0.0, 0.0]];
        assert!(matches!(
            sample_scenarios(&m, 1, 0, Execution::Sequential),
            Err(ScenarioError::NonPsdCovariance { .. })
        ));
    }
}
