use serde::{Deserialize, Serialize};

use super::report::{ExperimentOutput, Provenance, SeriesTable, Summary};
use crate::dynamics::{toy_trainer, ToyConfig};
use crate::error::{Error, Result};
use crate::estimation::{
    differentiate_strengths, estimate_ab_imodel, estimate_ab_lmodel, tail_report, EstimatorModel, Smoothing,
    TailVariant,
};

/// Toy trainer under increasing label noise; accuracies and tail indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelCorruptionConfig {
    /// Base trainer; its `p_err` is replaced by each entry of `p_errs`.
    pub toy: ToyConfig,
    pub p_errs: Vec<f64>,
    pub smoothing: Smoothing,
    pub tail_window: [f64; 2],
    #[serde(default = "lmodel")]
    pub estimator: EstimatorModel,
    #[serde(default = "integrated")]
    pub variant: TailVariant,
    #[serde(default)]
    pub seed: u64,
}

fn lmodel() -> EstimatorModel {
    EstimatorModel::L
}
fn integrated() -> TailVariant {
    TailVariant::FromIntegrated
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorruptionCondition {
    pub p_err: f64,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    pub r_alpha: f64,
    pub r_beta: f64,
    pub r_gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelCorruptionSummary {
    pub conditions: Vec<CorruptionCondition>,
    /// Interpolated p_err where r_γ first reaches 1.
    pub transition: Option<f64>,
    pub estimator: EstimatorModel,
    pub variant: TailVariant,
}

impl LabelCorruptionConfig {
    pub fn validate(&self) -> Result<()> {
        self.toy.validate()?;
        if self.p_errs.is_empty() || self.p_errs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("p_errs must be a non-empty list in [0, 1]".into()));
        }
        if self.estimator == EstimatorModel::L && self.toy.k != 3 {
            return Err(Error::RequiresK3(self.toy.k));
        }
        let [t1, t2] = self.tail_window;
        if !(0.0 < t1 && t1 < t2) {
            return Err(Error::Config("tail window needs 0 < t1 < t2".into()));
        }
        self.smoothing.validate(self.toy.recorded_iterations().len())
    }
}

/// First crossing of r = 1 along increasing p_err, linearly interpolated.
pub fn first_crossing(p_errs: &[f64], r: &[f64]) -> Option<f64> {
    if r.first().is_some_and(|&r0| r0 >= 1.0) {
        return Some(p_errs[0]);
    }
    (1..p_errs.len()).find(|&i| r[i - 1] < 1.0 && r[i] >= 1.0).map(|i| {
        let w = (1.0 - r[i - 1]) / (r[i] - r[i - 1]);
        p_errs[i - 1] + w * (p_errs[i] - p_errs[i - 1])
    })
}

pub fn run_label_corruption(cfg: &LabelCorruptionConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let mut p_errs = cfg.p_errs.clone();
    p_errs.sort_by(f64::total_cmp);
    let [t1, t2] = cfg.tail_window;
    let mut conditions = Vec::new();
    let mut tables = Vec::new();
    for (i, &p_err) in p_errs.iter().enumerate() {
        let toy = ToyConfig { p_err, ..cfg.toy.clone() };
        let run = toy_trainer(&toy, cfg.seed)?;
        let traj = run.ensemble.mean_trajectory()?;
        let ab = match cfg.estimator {
            EstimatorModel::I => estimate_ab_imodel(&traj, toy.k)?,
            EstimatorModel::L => estimate_ab_lmodel(&traj)?,
        };
        let st = differentiate_strengths(&ab, cfg.smoothing)?;
        let tail = match cfg.variant {
            TailVariant::FromIntegrated => tail_report(&ab.a_hat, &ab.b_hat, &ab.grid, t1, t2, cfg.variant)?,
            TailVariant::FromStrength => tail_report(&st.alpha_hat, &st.beta_hat, &st.grid, t1, t2, cfg.variant)?,
        };
        conditions.push(CorruptionCondition {
            p_err,
            train_accuracy: run.mean_train_accuracy(),
            val_accuracy: run.mean_val_accuracy(),
            r_alpha: tail.r_alpha,
            r_beta: tail.r_beta,
            r_gamma: tail.r_gamma,
        });
        tables.push(SeriesTable::from_columns(
            format!("strengths_{i}"),
            &ab.grid,
            &[("a_hat", &ab.a_hat), ("b_hat", &ab.b_hat), ("alpha_hat", &st.alpha_hat), ("beta_hat", &st.beta_hat)],
        ));
    }
    let mut summary_table = SeriesTable::new(
        "conditions",
        ["p_err", "train_accuracy", "val_accuracy", "r_alpha", "r_beta", "r_gamma"].map(String::from).to_vec(),
    );
    for c in &conditions {
        summary_table.rows.push(vec![c.p_err, c.train_accuracy, c.val_accuracy, c.r_alpha, c.r_beta, c.r_gamma]);
    }
    tables.insert(0, summary_table);
    let r_gamma: Vec<f64> = conditions.iter().map(|c| c.r_gamma).collect();
    let summary = LabelCorruptionSummary {
        transition: first_crossing(&p_errs, &r_gamma),
        conditions,
        estimator: cfg.estimator,
        variant: cfg.variant,
    };
    Ok(ExperimentOutput::new(Provenance::of(cfg, cfg.seed)?, Summary::LabelCorruption(summary), tables))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_interpolates() {
        let x = first_crossing(&[0.0, 0.5, 1.0], &[0.5, 0.8, 1.2]).unwrap();
        assert!((x - 0.75).abs() < 1e-12);
        assert_eq!(first_crossing(&[0.0, 1.0], &[0.5, 0.9]), None);
    }
}
