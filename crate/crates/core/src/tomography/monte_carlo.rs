//! Poisson-resampling error bars on reconstructed fidelities.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::counts::{poisson_draw, CountTable};
use super::estimator::{ml_reconstruct, ReconstructionOptions};
use crate::error::{Error, Result};
use crate::quantum::DensityOperator;

pub const DEFAULT_TRIALS: usize = 420;

#[derive(Clone, Debug)]
pub struct MonteCarloOptions {
    pub trials: usize,
    pub seed: u64,
    /// When off every trial reuses the point estimate.
    pub resample: bool,
    pub reconstruction: ReconstructionOptions,
}

impl Default for MonteCarloOptions {
    fn default() -> Self {
        Self {
            trials: DEFAULT_TRIALS,
            seed: 0,
            resample: true,
            reconstruction: ReconstructionOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub trials: usize,
    pub fidelity_mean: f64,
    /// Sample standard deviation; zero for a single trial.
    pub fidelity_std: f64,
    /// Point estimate from the unresampled counts.
    pub point_fidelity: f64,
    /// Successful trials in trial order.
    pub fidelities: Vec<f64>,
    pub failures: usize,
}

/// Resampled copy of `counts`: each observed n becomes a Poisson(n) draw.
pub fn resample_counts(counts: &CountTable, rng: &mut impl rand::Rng) -> CountTable {
    let mut out = counts.clone();
    for (s, n) in counts.iter() {
        if let Some(n) = n {
            out.set(&s, poisson_draw(n as f64, rng));
        }
    }
    out
}

/// Generator for trial `trial`: one stream per trial under a shared seed.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

pub fn monte_carlo_fidelity(
    counts: &CountTable,
    target: &DensityOperator,
    options: &MonteCarloOptions,
) -> Result<MonteCarloReport> {
    if options.trials == 0 {
        return Err(Error::ParameterRange {
            name: "trials",
            value: 0.0,
            range: "≥ 1",
        });
    }
    let point = ml_reconstruct(counts, &options.reconstruction)?;
    let point_fidelity = point.rho.fidelity(target)?;
    let mut trial_options = options.reconstruction.clone();
    trial_options.initial = Some(point.rho.clone());
    trial_options.record_history = false;

    let results: Vec<Result<f64>> = (0..options.trials)
        .into_par_iter()
        .map(|trial| {
            if !options.resample {
                return Ok(point_fidelity);
            }
            let data = resample_counts(counts, &mut trial_rng(options.seed, trial));
            let fit = ml_reconstruct(&data, &trial_options)?;
            fit.rho.fidelity(target)
        })
        .collect();
    let fidelities: Vec<f64> = results
        .iter()
        .filter_map(|r| r.as_ref().ok().copied())
        .collect();
    let failures = results.len() - fidelities.len();
    if fidelities.is_empty() {
        return Err(results
            .into_iter()
            .find_map(|r| r.err())
            .expect("every trial failed"));
    }
    let n = fidelities.len() as f64;
    let mean = fidelities.iter().sum::<f64>() / n;
    let std = if fidelities.len() > 1 {
        (fidelities.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(MonteCarloReport {
        trials: options.trials,
        fidelity_mean: mean,
        fidelity_std: std,
        point_fidelity,
        fidelities,
        failures,
    })
}
