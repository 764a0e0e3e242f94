use serde::{Deserialize, Serialize};

use super::report::{ExperimentOutput, Provenance, SeriesTable, Summary};
use crate::dynamics::{integrate_ode, simulate_sde, InitSpec, Integrator, MeanTrajectory, NoiseSpec, TimeGrid};
use crate::elasticity::{DriftSpec, ElasticitySchedule, ScheduleKind};
use crate::error::{Error, Result};
use crate::estimation::{
    differentiate_strengths, estimate_ab_imodel, estimate_ab_lmodel, tail_report, ABSeries, EstimatorModel,
    Smoothing, TailIndexReport, TailVariant,
};

/// Simulate from a known schedule, estimate it back, compare.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundTripConfig {
    pub model: EstimatorModel,
    pub k: usize,
    /// Ignored for the logit-aligned model (p = K).
    #[serde(default = "one")]
    pub p: usize,
    pub schedule: ElasticitySchedule,
    pub init_means: Vec<f64>,
    /// Isotropic noise level; 0 integrates the mean ODE instead.
    #[serde(default)]
    pub sigma: f64,
    #[serde(default = "one")]
    pub n: usize,
    #[serde(default = "one")]
    pub trials: usize,
    pub grid: TimeGrid,
    pub smoothing: Smoothing,
    /// Error is measured on grid points inside this window.
    pub trust_window: [f64; 2],
    #[serde(default)]
    pub tail: Option<TailCheck>,
    #[serde(default)]
    pub seed: u64,
}

/// Long noise-free run for tail-index recovery.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailCheck {
    pub grid: TimeGrid,
    pub t1: f64,
    pub t2: f64,
    #[serde(default = "integrated")]
    pub variant: TailVariant,
}

fn one() -> usize {
    1
}
fn integrated() -> TailVariant {
    TailVariant::FromIntegrated
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTripSummary {
    pub max_rel_error_alpha: f64,
    pub max_rel_error_beta: f64,
    pub max_rel_error: f64,
    pub trust_window: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailRecovery>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRecovery {
    pub estimated: TailIndexReport,
    /// (r_α, r_β) of a PowerTail schedule.
    pub truth: Option<(f64, f64)>,
}

impl RoundTripConfig {
    fn drift(&self) -> DriftSpec {
        match self.model {
            EstimatorModel::I => DriftSpec::imodel(self.k, self.p, 1.0, 0.0),
            EstimatorModel::L => DriftSpec::lmodel(self.k, 1.0, 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let drift = self.drift();
        drift.validate()?;
        self.schedule.validate()?;
        if self.model == EstimatorModel::L && self.k != 3 {
            return Err(Error::RequiresK3(self.k));
        }
        if self.init_means.len() != drift.dim() {
            return Err(Error::DimensionMismatch(format!("{} initial means for K·p = {}", self.init_means.len(), drift.dim())));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) || self.trials == 0 || self.n == 0 {
            return Err(Error::Config("sigma must be >= 0; n and trials >= 1".into()));
        }
        let [t1, t2] = self.trust_window;
        if !(t1 <= t2) {
            return Err(Error::Config(format!("trust window [{t1}, {t2}] is empty")));
        }
        self.smoothing.validate(self.grid.recorded_times()?.len())?;
        if let Some(tail) = &self.tail {
            tail.grid.steps()?;
            if !(0.0 < tail.t1 && tail.t1 < tail.t2) {
                return Err(Error::Config("tail window needs 0 < t1 < t2".into()));
            }
        }
        Ok(())
    }

    fn trajectory(&self, grid: &TimeGrid, noisy: bool) -> Result<MeanTrajectory> {
        let drift = self.drift();
        if noisy && self.sigma > 0.0 {
            let init = InitSpec::Gaussian { n: self.n, means: self.init_means.clone(), sd: 0.0 };
            let noise = NoiseSpec::Isotropic { sigma: self.sigma };
            simulate_sde(&drift, &self.schedule, &noise, &init, grid, self.trials, self.seed)?.mean_trajectory()
        } else {
            integrate_ode(&drift, &self.schedule, &self.init_means, grid, Integrator::Rk4)
        }
    }

    fn estimate(&self, traj: &MeanTrajectory) -> Result<ABSeries> {
        match self.model {
            EstimatorModel::I => estimate_ab_imodel(traj, self.k),
            EstimatorModel::L => estimate_ab_lmodel(traj),
        }
    }
}

fn rel_error(est: f64, truth: f64) -> f64 {
    let scale = truth.abs();
    if scale < 1e-12 {
        (est - truth).abs()
    } else {
        (est - truth).abs() / scale
    }
}

pub fn run_roundtrip(cfg: &RoundTripConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let traj = cfg.trajectory(&cfg.grid, true)?;
    let ab = cfg.estimate(&traj)?;
    let st = differentiate_strengths(&ab, cfg.smoothing)?;
    let truth: Vec<(f64, f64)> = st.grid.iter().map(|&t| cfg.schedule.eval(t)).collect::<Result<_>>()?;
    let [t1, t2] = cfg.trust_window;
    let (mut err_a, mut err_b) = (0.0f64, 0.0f64);
    let mut inside = 0;
    for (i, &t) in st.grid.iter().enumerate() {
        if t >= t1 && t <= t2 {
            inside += 1;
            err_a = err_a.max(rel_error(st.alpha_hat[i], truth[i].0));
            err_b = err_b.max(rel_error(st.beta_hat[i], truth[i].1));
        }
    }
    if inside == 0 {
        return Err(Error::EmptyWindow { t1, t2 });
    }
    let alpha: Vec<f64> = truth.iter().map(|x| x.0).collect();
    let beta: Vec<f64> = truth.iter().map(|x| x.1).collect();
    let mut tables = vec![SeriesTable::from_columns(
        "strengths",
        &st.grid,
        &[
            ("alpha", &alpha),
            ("beta", &beta),
            ("alpha_hat", &st.alpha_hat),
            ("beta_hat", &st.beta_hat),
            ("a_hat", &ab.a_hat),
            ("b_hat", &ab.b_hat),
        ],
    )];
    let tail = match &cfg.tail {
        None => None,
        Some(tc) => {
            let long = cfg.trajectory(&tc.grid, false)?;
            let ab_long = cfg.estimate(&long)?;
            let estimated = match tc.variant {
                TailVariant::FromIntegrated => {
                    tail_report(&ab_long.a_hat, &ab_long.b_hat, &ab_long.grid, tc.t1, tc.t2, tc.variant)?
                }
                TailVariant::FromStrength => {
                    let s = differentiate_strengths(&ab_long, cfg.smoothing)?;
                    tail_report(&s.alpha_hat, &s.beta_hat, &s.grid, tc.t1, tc.t2, tc.variant)?
                }
            };
            tables.push(SeriesTable::from_columns(
                "tail_integrated",
                &ab_long.grid,
                &[("a_hat", &ab_long.a_hat), ("b_hat", &ab_long.b_hat)],
            ));
            let truth = match cfg.schedule.kind {
                ScheduleKind::PowerTail { r_alpha, r_beta, .. } => Some((r_alpha, r_beta)),
                _ => None,
            };
            Some(TailRecovery { estimated, truth })
        }
    };
    let summary = RoundTripSummary {
        max_rel_error_alpha: err_a,
        max_rel_error_beta: err_b,
        max_rel_error: err_a.max(err_b),
        trust_window: cfg.trust_window,
        tail,
    };
    Ok(ExperimentOutput::new(Provenance::of(cfg, cfg.seed)?, Summary::RoundTrip(summary), tables))
}
