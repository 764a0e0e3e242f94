use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ensemble::{FeatureEnsemble, InitSpec, MeanTrajectory, NoiseSampler, NoiseSpec, TrialEnsemble};
use super::trials::{run_indexed, trial_rng};
use crate::elasticity::{DriftSpec, EffectMatrix, ElasticitySchedule};
use crate::error::{Error, Result};
use crate::linalg::Mat;

pub const BLOW_UP_LIMIT: f64 = 1e12;

/// Uniform step grid on [0, horizon], recorded every `record_every` steps
/// (the final step is always recorded).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub horizon: f64,
    pub dt: f64,
    #[serde(default = "default_stride")]
    pub record_every: usize,
}

fn default_stride() -> usize {
    1
}

impl TimeGrid {
    pub fn new(horizon: f64, dt: f64, record_every: usize) -> Self {
        TimeGrid { horizon, dt, record_every }
    }

    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon {} must be at least dt = {}", self.horizon, self.dt)));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidArgument("record_every must be >= 1".into()));
        }
        Ok((self.horizon / self.dt).round() as usize)
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }

    fn records(&self, step: usize, total: usize) -> bool {
        step % self.record_every == 0 || step == total
    }

    /// The recorded time points.
    pub fn recorded_times(&self) -> Result<Vec<f64>> {
        let n = self.steps()?;
        Ok((0..=n).filter(|&s| self.records(s, n)).map(|s| self.time(s)).collect())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Integrator {
    #[default]
    Rk4,
    Euler,
}

/// Builds M_t, reusing the last matrix while the strengths stay the same.
struct DriftCache<'a> {
    spec: &'a DriftSpec,
    sched: &'a ElasticitySchedule,
    key: Option<(f64, f64)>,
    m: Mat,
}

impl<'a> DriftCache<'a> {
    fn new(spec: &'a DriftSpec, sched: &'a ElasticitySchedule) -> Result<Self> {
        spec.validate()?;
        sched.validate()?;
        Ok(DriftCache { spec, sched, key: None, m: Mat::zeros(0, 0) })
    }

    fn at(&mut self, t: f64) -> Result<&Mat> {
        let key = match self.spec.effect {
            EffectMatrix::TwoValue { .. } => self.sched.eval(t)?,
            EffectMatrix::GeneralSymmetric { .. } => (0.0, 0.0),
        };
        if self.key != Some(key) {
            self.m = self.spec.drift_at(self.sched, t)?;
            self.key = Some(key);
        }
        Ok(&self.m)
    }
}

fn check_blow_up(values: &[f64], t: f64) -> Result<()> {
    if values.iter().any(|v| !(v.abs() <= BLOW_UP_LIMIT)) {
        return Err(Error::BlowUp { t });
    }
    Ok(())
}

fn check_dims(spec: &DriftSpec, ens: &FeatureEnsemble) -> Result<()> {
    if (spec.k(), spec.p()) != (ens.k, ens.p) {
        return Err(Error::DimensionMismatch(format!(
            "ensemble has K={}, p={}; drift has K={}, p={}",
            ens.k,
            ens.p,
            spec.k(),
            spec.p()
        )));
    }
    Ok(())
}

/// One step of the sample-level update: a single class L and sample J are
/// drawn, and every feature moves by h·E_{k,L}·H_{k,L}·X_J^L plus √h noise.
pub fn step_discrete<R: Rng + ?Sized>(
    ens: &FeatureEnsemble,
    spec: &DriftSpec,
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<FeatureEnsemble> {
    check_dims(spec, ens)?;
    spec.validate()?;
    let sampler = noise.prepare(ens.k * ens.p)?;
    let (j, l) = draw_pair(ens, spec, rng)?;
    Ok(discrete_update(ens, spec, &sampler, rng, j, l))
}

/// [`step_discrete`] with the driving pair (J, L) fixed by the caller.
pub fn step_discrete_forced<R: Rng + ?Sized>(
    ens: &FeatureEnsemble,
    spec: &DriftSpec,
    noise: &NoiseSpec,
    rng: &mut R,
    sample: usize,
    class: usize,
) -> Result<FeatureEnsemble> {
    check_dims(spec, ens)?;
    spec.validate()?;
    if sample >= ens.n || class >= ens.k {
        return Err(Error::InvalidArgument(format!("forced pair ({sample}, {class}) out of range")));
    }
    let sampler = noise.prepare(ens.k * ens.p)?;
    Ok(discrete_update(ens, spec, &sampler, rng, sample, class))
}

fn draw_pair<R: Rng + ?Sized>(ens: &FeatureEnsemble, spec: &DriftSpec, rng: &mut R) -> Result<(usize, usize)> {
    let classes = WeightedIndex::new(spec.sampling_probs())
        .map_err(|e| Error::InvalidArgument(format!("sampling probabilities: {e}")))?;
    let l = classes.sample(rng);
    let j = rng.random_range(0..ens.n);
    Ok((j, l))
}

fn discrete_update<R: Rng + ?Sized>(
    ens: &FeatureEnsemble,
    spec: &DriftSpec,
    sampler: &NoiseSampler,
    rng: &mut R,
    j: usize,
    l: usize,
) -> FeatureEnsemble {
    let (k, p, h) = (ens.k, ens.p, ens.h);
    let driver = ens.sample(j, l);
    let mut shift = vec![0.0; k * p];
    for c in 0..k {
        let w = h * spec.effect.entry(c, l);
        if w == 0.0 {
            continue;
        }
        let hv = spec.kernel.block(c, l).matvec(driver);
        for (s, v) in shift[c * p..(c + 1) * p].iter_mut().zip(hv) {
            *s = w * v;
        }
    }
    let mut out = ens.clone();
    let root_h = h.sqrt();
    for chunk in out.data.chunks_exact_mut(k * p) {
        for (x, s) in chunk.iter_mut().zip(&shift) {
            *x += s;
        }
        sampler.add_sample(rng, root_h, chunk);
    }
    out.t = ens.t + h;
    out
}

/// Repeated discrete steps with step size `grid.dt`; two-value strengths
/// follow the schedule.
pub fn simulate_discrete(
    spec: &DriftSpec,
    sched: &ElasticitySchedule,
    noise: &NoiseSpec,
    init: &InitSpec,
    grid: &TimeGrid,
    trials: usize,
    seed: u64,
) -> Result<TrialEnsemble> {
    spec.validate()?;
    sched.validate()?;
    let (k, p) = (spec.k(), spec.p());
    init.validate(k, p)?;
    let steps = grid.steps()?;
    let sampler = noise.prepare(k * p)?;
    let classes = WeightedIndex::new(spec.sampling_probs())
        .map_err(|e| Error::InvalidArgument(format!("sampling probabilities: {e}")))?;
    let runs = run_indexed(trials, |trial| {
        let mut rng = trial_rng(seed, trial);
        let mut ens = init.draw(k, p, &mut rng);
        ens.h = grid.dt;
        let mut snaps = vec![ens.clone()];
        for step in 1..=steps {
            let t = grid.time(step - 1);
            let (a, b) = sched.eval(t)?;
            let now = spec.with_strengths(a, b);
            let l = classes.sample(&mut rng);
            let j = rng.random_range(0..ens.n);
            ens = discrete_update(&ens, &now, &sampler, &mut rng, j, l);
            ens.t = grid.time(step);
            check_blow_up(&ens.data, ens.t)?;
            if grid.records(step, steps) {
                snaps.push(ens.clone());
            }
        }
        Ok(snaps)
    })?;
    Ok(TrialEnsemble { n: init.n(), k, p, grid: grid.recorded_times()?, trials: runs, seed: Some(seed) })
}

/// Euler–Maruyama for X ← X + M_t X̄ dt + Σ^{1/2}√dt ξ, every sample sharing
/// the class-mean drift.
pub fn simulate_sde(
    spec: &DriftSpec,
    sched: &ElasticitySchedule,
    noise: &NoiseSpec,
    init: &InitSpec,
    grid: &TimeGrid,
    trials: usize,
    seed: u64,
) -> Result<TrialEnsemble> {
    spec.validate()?;
    sched.validate()?;
    let (k, p) = (spec.k(), spec.p());
    init.validate(k, p)?;
    let steps = grid.steps()?;
    let sampler = noise.prepare(k * p)?;
    let dt = grid.dt;
    let root_dt = dt.sqrt();
    let runs = run_indexed(trials, |trial| {
        let mut rng = trial_rng(seed, trial);
        let mut cache = DriftCache::new(spec, sched)?;
        let mut ens = init.draw(k, p, &mut rng);
        ens.h = dt;
        let mut snaps = vec![ens.clone()];
        let mut drift = vec![0.0; k * p];
        for step in 1..=steps {
            let t = grid.time(step - 1);
            let xbar = ens.class_means();
            cache.at(t)?.matvec_into(&xbar, &mut drift);
            for chunk in ens.data.chunks_exact_mut(k * p) {
                for (x, d) in chunk.iter_mut().zip(&drift) {
                    *x += d * dt;
                }
                sampler.add_sample(&mut rng, root_dt, chunk);
            }
            ens.t = grid.time(step);
            check_blow_up(&ens.data, ens.t)?;
            if grid.records(step, steps) {
                snaps.push(ens.clone());
            }
        }
        Ok(snaps)
    })?;
    Ok(TrialEnsemble { n: init.n(), k, p, grid: grid.recorded_times()?, trials: runs, seed: Some(seed) })
}

/// Deterministic class-mean dynamics X̄' = M_t X̄.
pub fn integrate_ode(
    spec: &DriftSpec,
    sched: &ElasticitySchedule,
    init: &[f64],
    grid: &TimeGrid,
    method: Integrator,
) -> Result<MeanTrajectory> {
    let mut cache = DriftCache::new(spec, sched)?;
    let dim = spec.dim();
    if init.len() != dim {
        return Err(Error::DimensionMismatch(format!("{} initial values for K·p = {dim}", init.len())));
    }
    let steps = grid.steps()?;
    let dt = grid.dt;
    let mut x = init.to_vec();
    let mut grid_out = vec![0.0];
    let mut means = vec![x.clone()];
    let axpy = |x: &[f64], a: f64, y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(u, v)| u + a * v).collect() };
    for step in 1..=steps {
        let t = grid.time(step - 1);
        x = match method {
            Integrator::Euler => {
                let k1 = cache.at(t)?.matvec(&x);
                axpy(&x, dt, &k1)
            }
            Integrator::Rk4 => {
                let k1 = cache.at(t)?.matvec(&x);
                let k2 = cache.at(t + 0.5 * dt)?.matvec(&axpy(&x, 0.5 * dt, &k1));
                let k3 = cache.at(t + 0.5 * dt)?.matvec(&axpy(&x, 0.5 * dt, &k2));
                let k4 = cache.at(t + dt)?.matvec(&axpy(&x, dt, &k3));
                x.iter()
                    .enumerate()
                    .map(|(i, v)| v + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                    .collect()
            }
        };
        let t_next = grid.time(step);
        check_blow_up(&x, t_next)?;
        if grid.records(step, steps) {
            grid_out.push(t_next);
            means.push(x.clone());
        }
    }
    MeanTrajectory::new(grid_out, spec.k(), spec.p(), means)
}
