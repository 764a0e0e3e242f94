use std::path::PathBuf;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::report::{ExperimentOutput, Provenance, SeriesTable, Summary};
use crate::dynamics::{
    fit_lmodel_coefficients, integrate_ode, lmodel_closed_form, run_indexed, toy_trainer, trial_rng, Integrator,
    MeanTrajectory, TimeGrid, ToyConfig,
};
use crate::elasticity::{DriftSpec, ElasticitySchedule};
use crate::error::{Error, Result};
use crate::estimation::{
    differentiate_strengths, estimate_ab_imodel, estimate_ab_lmodel, uniform_spacing, EstimatorModel, Smoothing,
};
use crate::geometry::relative_difference;
use crate::linalg::norm2;

/// Where the genuine trajectory comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum ImitationSource {
    Toy {
        toy: ToyConfig,
    },
    /// Logit-aligned closed form with constant strengths plus i.i.d.
    /// Gaussian observation noise.
    LModel {
        #[serde(default = "three")]
        k: usize,
        alpha: f64,
        beta: f64,
        #[serde(default)]
        sigma: f64,
        init: Vec<f64>,
        grid: TimeGrid,
    },
    /// Trajectory CSV; trials are averaged.
    Trajectory {
        path: PathBuf,
    },
}

fn three() -> usize {
    3
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathAggregate {
    Mean,
    /// Coordinate-wise median; robust to paths whose dominant coordinate
    /// nearly vanishes at the final checkpoint.
    #[default]
    Median,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImitationInit {
    /// Zero-mean Gaussian per class with variance ‖X̄^k(0)‖²/K.
    #[default]
    Gaussian,
    /// A single path started at the source's initial means.
    Source,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImitationConfig {
    pub source: ImitationSource,
    pub smoothing: Smoothing,
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default)]
    pub init: ImitationInit,
    #[serde(default)]
    pub aggregate: PathAggregate,
    /// Integrator steps per source grid interval.
    #[serde(default = "one")]
    pub substeps: usize,
    /// RD is summarised over t ≥ tail_fraction·T.
    #[serde(default = "default_tail")]
    pub tail_fraction: f64,
    #[serde(default = "both")]
    pub estimators: Vec<EstimatorModel>,
    /// Known strengths to imitate with, alongside the estimated ones.
    #[serde(default)]
    pub oracle: Option<ElasticitySchedule>,
    #[serde(default)]
    pub seed: u64,
}

fn default_paths() -> usize {
    50
}
fn one() -> usize {
    1
}
fn default_tail() -> f64 {
    0.75
}
fn both() -> Vec<EstimatorModel> {
    vec![EstimatorModel::I, EstimatorModel::L]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImitationResult {
    /// "I", "L" or "oracle".
    pub label: String,
    /// Estimator that produced the strengths (`None` for the oracle).
    pub model: Option<EstimatorModel>,
    /// Mean RD per class over the tail of the run.
    pub rd_tail_mean: Vec<f64>,
    pub rd_tail_max: f64,
    pub argmax_source: Vec<usize>,
    pub argmax_simulated: Vec<usize>,
    pub argmax_agree: bool,
    /// Per-class rescaling factors over paths.
    pub alignment_mean: Vec<f64>,
    pub alignment_median: Vec<f64>,
    pub zero_denominators: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImitationSummary {
    pub tail_from: f64,
    pub paths: usize,
    pub results: Vec<ImitationResult>,
}

impl ImitationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 || self.substeps == 0 {
            return Err(Error::Config("paths and substeps must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.tail_fraction) {
            return Err(Error::Config("tail_fraction must lie in [0, 1]".into()));
        }
        if self.estimators.is_empty() && self.oracle.is_none() {
            return Err(Error::Config("nothing to imitate: no estimators and no oracle".into()));
        }
        if let Some(o) = &self.oracle {
            o.validate()?;
        }
        match &self.source {
            ImitationSource::Toy { toy } => toy.validate(),
            ImitationSource::LModel { k, sigma, init, grid, .. } => {
                if init.len() != k * k {
                    return Err(Error::DimensionMismatch(format!("{} initial values for K² = {}", init.len(), k * k)));
                }
                if !(*sigma >= 0.0 && sigma.is_finite()) {
                    return Err(Error::Config("sigma must be finite and >= 0".into()));
                }
                grid.steps().map(|_| ())
            }
            ImitationSource::Trajectory { .. } => Ok(()),
        }
    }
}

impl ImitationSource {
    pub fn trajectory(&self, seed: u64) -> Result<MeanTrajectory> {
        match self {
            ImitationSource::Toy { toy } => toy_trainer(toy, seed)?.ensemble.mean_trajectory(),
            ImitationSource::LModel { k, alpha, beta, sigma, init, grid } => {
                let coeffs = fit_lmodel_coefficients(init, *k, *alpha, *beta)?;
                let sched = ElasticitySchedule::constant(*alpha, *beta);
                let mut rng = trial_rng(seed, 0);
                let times = grid.recorded_times()?;
                let means = times
                    .iter()
                    .map(|&t| {
                        let mut x = lmodel_closed_form(&coeffs, &sched, t)?;
                        if *sigma > 0.0 {
                            for v in &mut x {
                                let z: f64 = StandardNormal.sample(&mut rng);
                                *v += sigma * z;
                            }
                        }
                        Ok(x)
                    })
                    .collect::<Result<Vec<_>>>()?;
                MeanTrajectory::new(times, *k, *k, means)
            }
            ImitationSource::Trajectory { path } => crate::io::read_trajectory_file(path)?.mean(),
        }
    }
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |best, j| if v[j] > v[best] { j } else { best })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Imitation always integrates the logit-aligned ODE; the estimator only
/// decides where the strengths come from.
fn logit_drift(k: usize, p: usize) -> Result<DriftSpec> {
    if p != k {
        return Err(Error::DimensionMismatch(format!("imitation needs logit trajectories (p = K), got p = {p}, K = {k}")));
    }
    Ok(DriftSpec::lmodel(k, 1.0, 0.0))
}

fn flat_columns(traj: &MeanTrajectory) -> (Vec<String>, Vec<Vec<f64>>) {
    let names = (0..traj.k).flat_map(|c| (0..traj.p).map(move |j| format!("x_{c}_{j}"))).collect();
    let cols = (0..traj.k * traj.p).map(|i| traj.means.iter().map(|m| m[i]).collect()).collect();
    (names, cols)
}

fn trajectory_table(name: String, traj: &MeanTrajectory) -> SeriesTable {
    let (names, cols) = flat_columns(traj);
    let named: Vec<(&str, &[f64])> = names.iter().map(String::as_str).zip(cols.iter().map(Vec::as_slice)).collect();
    SeriesTable::from_columns(name, &traj.grid, &named)
}

struct Imitated {
    result: ImitationResult,
    tables: Vec<SeriesTable>,
}

fn imitate(
    cfg: &ImitationConfig,
    source: &MeanTrajectory,
    label: &str,
    model: Option<EstimatorModel>,
    sched: &ElasticitySchedule,
    tail_from: f64,
) -> Result<Imitated> {
    let (k, p) = (source.k, source.p);
    let drift = logit_drift(k, p)?;
    let dt = uniform_spacing(&source.grid)?;
    let last = source.len() - 1;
    let horizon = source.grid[last];
    let grid = TimeGrid::new(horizon, dt / cfg.substeps as f64, cfg.substeps);
    let scales: Vec<f64> = (0..k).map(|c| norm2(source.class_mean(0, c)) / (k as f64).sqrt()).collect();
    // Coordinate used for alignment: the dominant one of each class at the end.
    let pivot: Vec<usize> = (0..k)
        .map(|c| {
            let m: Vec<f64> = source.class_mean(last, c).iter().map(|v| v.abs()).collect();
            argmax(&m)
        })
        .collect();
    let paths = match cfg.init {
        ImitationInit::Gaussian => cfg.paths,
        ImitationInit::Source => 1,
    };
    let runs = run_indexed(paths, |path| {
        let x0: Vec<f64> = match cfg.init {
            ImitationInit::Source => source.means[0].clone(),
            ImitationInit::Gaussian => {
                let mut rng = trial_rng(cfg.seed.wrapping_add(1), path);
                (0..k * p)
                    .map(|i| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        scales[i / p] * z
                    })
                    .collect()
            }
        };
        let mut traj = integrate_ode(&drift, sched, &x0, &grid, Integrator::Euler)?;
        if traj.len() != source.len() {
            return Err(Error::GridMismatch(format!("{} simulated points for {} source points", traj.len(), source.len())));
        }
        let end = traj.means[last].clone();
        let factors: Vec<f64> = (0..k)
            .map(|c| {
                let y = end[c * p + pivot[c]];
                if y != 0.0 {
                    source.class_mean(last, c)[pivot[c]] / y
                } else {
                    1.0
                }
            })
            .collect();
        for m in &mut traj.means {
            for (i, v) in m.iter_mut().enumerate() {
                *v *= factors[i / p];
            }
        }
        Ok((traj.means, factors))
    })?;
    let avg: Vec<Vec<f64>> = (0..source.len())
        .map(|ti| {
            (0..k * p)
                .map(|i| {
                    let vals: Vec<f64> = runs.iter().map(|(m, _)| m[ti][i]).collect();
                    match cfg.aggregate {
                        PathAggregate::Mean => vals.iter().sum::<f64>() / vals.len() as f64,
                        PathAggregate::Median => median(vals),
                    }
                })
                .collect()
        })
        .collect();
    let sim = MeanTrajectory::new(source.grid.clone(), k, p, avg)?;
    let rd = relative_difference(source, &sim, &drift.kernel)?;
    let rd_tail_mean: Vec<f64> = (0..k).map(|c| rd.tail_mean(c, tail_from)).collect();
    let argmax_source: Vec<usize> = (0..k).map(|c| argmax(source.class_mean(last, c))).collect();
    let argmax_simulated: Vec<usize> = (0..k).map(|c| argmax(sim.class_mean(last, c))).collect();
    let alignment: Vec<Vec<f64>> = (0..k).map(|c| runs.iter().map(|(_, f)| f[c]).collect()).collect();
    let rd_names: Vec<String> = (0..k).map(|c| format!("rd_{c}")).collect();
    let rd_named: Vec<(&str, &[f64])> =
        rd_names.iter().map(String::as_str).zip(rd.rd.iter().map(Vec::as_slice)).collect();
    let tables = vec![
        SeriesTable::from_columns(format!("rd_{label}"), &rd.grid, &rd_named),
        trajectory_table(format!("simulated_{label}"), &sim),
    ];
    Ok(Imitated {
        result: ImitationResult {
            label: label.to_string(),
            model,
            rd_tail_max: rd_tail_mean.iter().copied().fold(0.0, f64::max),
            rd_tail_mean,
            argmax_agree: argmax_source == argmax_simulated,
            argmax_source,
            argmax_simulated,
            alignment_mean: alignment.iter().map(|a| a.iter().sum::<f64>() / a.len() as f64).collect(),
            alignment_median: alignment.into_iter().map(median).collect(),
            zero_denominators: rd.zero_denominators,
        },
        tables,
    })
}

/// Estimate strengths from a trajectory, re-simulate with them, and compare.
pub fn run_imitation(cfg: &ImitationConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let source = cfg.source.trajectory(cfg.seed)?;
    if source.grid[0].abs() > 1e-12 {
        return Err(Error::GridMismatch("source trajectory must start at t = 0".into()));
    }
    cfg.smoothing.validate(source.len())?;
    let tail_from = cfg.tail_fraction * source.grid[source.len() - 1];
    let mut results = Vec::new();
    let mut tables = vec![trajectory_table("source".into(), &source)];
    for &model in &cfg.estimators {
        let (label, ab) = match model {
            EstimatorModel::I => ("I", estimate_ab_imodel(&source, source.k)?),
            EstimatorModel::L => ("L", estimate_ab_lmodel(&source)?),
        };
        let st = differentiate_strengths(&ab, cfg.smoothing)?;
        let sched = ElasticitySchedule::tabulated(st.grid.clone(), st.alpha_hat.clone(), st.beta_hat.clone())?;
        let out = imitate(cfg, &source, label, Some(model), &sched, tail_from)?;
        tables.push(SeriesTable::from_columns(
            format!("strengths_{label}"),
            &st.grid,
            &[("a_hat", &ab.a_hat), ("b_hat", &ab.b_hat), ("alpha_hat", &st.alpha_hat), ("beta_hat", &st.beta_hat)],
        ));
        tables.extend(out.tables);
        results.push(out.result);
    }
    if let Some(o) = &cfg.oracle {
        let out = imitate(cfg, &source, "oracle", None, o, tail_from)?;
        tables.extend(out.tables);
        results.push(out.result);
    }
    let paths = match cfg.init {
        ImitationInit::Gaussian => cfg.paths,
        ImitationInit::Source => 1,
    };
    let summary = ImitationSummary { tail_from, paths, results };
    Ok(ExperimentOutput::new(Provenance::of(cfg, cfg.seed)?, Summary::Imitation(summary), tables))
}
