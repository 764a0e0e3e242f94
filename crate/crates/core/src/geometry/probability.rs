use serde::{Deserialize, Serialize};

use super::separation::{check_direction, is_linearly_separable};
use crate::dynamics::{simulate_sde, FeatureEnsemble, InitSpec, NoiseSpec, TimeGrid};
use crate::elasticity::{DriftSpec, ElasticitySchedule};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum SeparationCheck {
    /// Fixed direction shared by every class pair.
    Direction { nu: Vec<f64> },
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparationConfig {
    pub drift: DriftSpec,
    pub schedule: ElasticitySchedule,
    pub noise: NoiseSpec,
    pub init: InitSpec,
    pub grid: TimeGrid,
    pub trials: usize,
    pub check: SeparationCheck,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationProbability {
    pub grid: Vec<f64>,
    pub probability: Vec<f64>,
    /// 1.96·√(p̂(1 − p̂)/trials).
    pub half_width: Vec<f64>,
    pub trials: usize,
}

/// Whether every class pair of a snapshot separates.
pub fn all_pairs_separable(ens: &FeatureEnsemble, check: &SeparationCheck) -> Result<bool> {
    for k in 0..ens.k {
        for l in k + 1..ens.k {
            let (a, b) = (ens.class_samples(k), ens.class_samples(l));
            let v = match check {
                SeparationCheck::Direction { nu } => check_direction(&a, &b, nu)?,
                SeparationCheck::Exact => is_linearly_separable(&a, &b)?,
            };
            if !v.separable {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Fraction of trials in which all class pairs separate, per checkpoint.
pub fn separation_probability(cfg: &SeparationConfig, seed: u64) -> Result<SeparationProbability> {
    let ens = simulate_sde(&cfg.drift, &cfg.schedule, &cfg.noise, &cfg.init, &cfg.grid, cfg.trials, seed)?;
    let mut hits = vec![0usize; ens.grid.len()];
    for trial in &ens.trials {
        for (h, snap) in hits.iter_mut().zip(trial) {
            if all_pairs_separable(snap, &cfg.check)? {
                *h += 1;
            }
        }
    }
    let n = cfg.trials as f64;
    let probability: Vec<f64> = hits.iter().map(|&h| h as f64 / n).collect();
    let half_width = probability.iter().map(|p| 1.96 * (p * (1.0 - p) / n).sqrt()).collect();
    Ok(SeparationProbability { grid: ens.grid, probability, half_width, trials: cfg.trials })
}
