use serde::{Deserialize, Serialize};

use super::report::{ExperimentOutput, Provenance, SeriesTable, Summary};
use crate::dynamics::{InitSpec, NoiseSpec, TimeGrid};
use crate::elasticity::{DriftSpec, ElasticitySchedule};
use crate::error::{Error, Result};
use crate::geometry::{separation_probability, SeparationCheck, SeparationConfig};

/// Separation frequency of the identity-kernel SDE with α(t) = γ₀(1+t)^{-r},
/// swept over r.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSweepConfig {
    pub exponents: Vec<f64>,
    #[serde(default = "one")]
    pub gamma0: f64,
    /// Cross-class strength prefactor; decays with the same exponent.
    #[serde(default)]
    pub beta0: f64,
    #[serde(default = "two")]
    pub k: usize,
    #[serde(default = "one_usize")]
    pub p: usize,
    /// Stacked K·p initial class means.
    pub init_means: Vec<f64>,
    #[serde(default)]
    pub init_sd: f64,
    pub n: usize,
    pub trials: usize,
    pub sigma: f64,
    pub grid: TimeGrid,
    #[serde(default = "exact")]
    pub check: SeparationCheck,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}
fn two() -> usize {
    2
}
fn one_usize() -> usize {
    1
}
fn exact() -> SeparationCheck {
    SeparationCheck::Exact
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSweepSummary {
    /// Exponents in ascending order.
    pub exponents: Vec<f64>,
    /// Separation frequency at the horizon, per exponent.
    pub final_frequency: Vec<f64>,
    pub final_half_width: Vec<f64>,
    /// Midpoint of the steepest drop in final frequency, if any.
    pub transition: Option<f64>,
}

impl PhaseSweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.exponents.is_empty() || self.exponents.iter().any(|r| !r.is_finite()) {
            return Err(Error::Config("exponents must be a non-empty list of finite numbers".into()));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config("sigma must be finite and >= 0".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        self.separation_config(self.exponents[0])?.init.validate(self.k, self.p)?;
        self.grid.steps()?;
        Ok(())
    }

    fn separation_config(&self, r: f64) -> Result<SeparationConfig> {
        let drift = DriftSpec::imodel(self.k, self.p, self.gamma0, self.beta0);
        drift.validate()?;
        Ok(SeparationConfig {
            drift,
            schedule: ElasticitySchedule::power_tail(self.gamma0, self.beta0, r, r),
            noise: NoiseSpec::Isotropic { sigma: self.sigma },
            init: InitSpec::Gaussian { n: self.n, means: self.init_means.clone(), sd: self.init_sd },
            grid: self.grid,
            trials: self.trials,
            check: self.check.clone(),
        })
    }
}

/// Midpoint between the two neighbouring exponents with the largest
/// frequency drop; `None` when the frequency never drops.
pub fn steepest_drop(exponents: &[f64], freq: &[f64]) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for i in 1..exponents.len() {
        let drop = freq[i - 1] - freq[i];
        if drop > 0.0 && best.is_none_or(|(d, _)| drop > d) {
            best = Some((drop, 0.5 * (exponents[i - 1] + exponents[i])));
        }
    }
    best.map(|(_, r)| r)
}

pub fn run_phase_sweep(cfg: &PhaseSweepConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let mut exponents = cfg.exponents.clone();
    exponents.sort_by(f64::total_cmp);
    let mut final_frequency = Vec::new();
    let mut final_half_width = Vec::new();
    let mut grid = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for &r in &exponents {
        // Same seed for every exponent: common random numbers across the sweep.
        let prob = separation_probability(&cfg.separation_config(r)?, cfg.seed)?;
        final_frequency.push(*prob.probability.last().unwrap());
        final_half_width.push(*prob.half_width.last().unwrap());
        grid = prob.grid;
        columns.push(prob.probability);
    }
    let names: Vec<String> = exponents.iter().map(|r| format!("r={r}")).collect();
    let named: Vec<(&str, &[f64])> = names.iter().map(String::as_str).zip(columns.iter().map(Vec::as_slice)).collect();
    let freq_table = SeriesTable::from_columns("separation_frequency", &grid, &named);
    let mut final_table =
        SeriesTable::new("final_frequency", vec!["r".into(), "frequency".into(), "half_width".into()]);
    for i in 0..exponents.len() {
        final_table.rows.push(vec![exponents[i], final_frequency[i], final_half_width[i]]);
    }
    let summary = PhaseSweepSummary {
        transition: steepest_drop(&exponents, &final_frequency),
        exponents,
        final_frequency,
        final_half_width,
    };
    Ok(ExperimentOutput::new(
        Provenance::of(cfg, cfg.seed)?,
        Summary::PhaseSweep(summary),
        vec![freq_table, final_table],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steepest_drop_picks_largest_fall() {
        assert_eq!(steepest_drop(&[0.5, 0.75, 1.25, 1.5], &[1.0, 0.9, 0.1, 0.0]), Some(1.0));
        assert_eq!(steepest_drop(&[0.5, 1.0], &[0.2, 0.2]), None);
    }

    #[test]
    fn unknown_field_is_rejected() {
        let json = r#"{"exponents":[1.0],"init_means":[1,0],"n":2,"trials":1,"sigma":0.1,
            "grid":{"horizon":1,"dt":0.1},"bogus":1}"#;
        assert!(serde_json::from_str::<PhaseSweepConfig>(json).is_err());
    }
}
