use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::ensemble::{FeatureEnsemble, TrialEnsemble};
use super::trials::{run_indexed, trial_rng};
use crate::error::{Error, Result};

/// Linear softmax classifier trained by single-sample SGD on a Gaussian
/// mixture with class means at s·e_k.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyConfig {
    pub k: usize,
    /// Input dimension (≥ K).
    pub q: usize,
    pub per_class: usize,
    pub separation: f64,
    /// Probability that a training label is replaced by a uniformly chosen other class.
    #[serde(default)]
    pub p_err: f64,
    pub lr: f64,
    pub iterations: usize,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Clean held-out samples per class for validation accuracy.
    #[serde(default = "default_val")]
    pub val_per_class: usize,
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
}

fn default_record_every() -> usize {
    100
}
fn default_trials() -> usize {
    1
}
fn default_val() -> usize {
    200
}
fn default_init_scale() -> f64 {
    0.01
}

impl ToyConfig {
    pub fn new(k: usize, q: usize, per_class: usize, separation: f64, p_err: f64, lr: f64, iterations: usize) -> Self {
        ToyConfig {
            k,
            q,
            per_class,
            separation,
            p_err,
            lr,
            iterations,
            record_every: default_record_every(),
            trials: default_trials(),
            val_per_class: default_val(),
            init_scale: default_init_scale(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 || self.q < self.k {
            return Err(Error::InvalidArgument(format!("need K >= 2 and q >= K, got K = {}, q = {}", self.k, self.q)));
        }
        if self.per_class == 0 || self.trials == 0 || self.record_every == 0 {
            return Err(Error::InvalidArgument("per_class, trials and record_every must be >= 1".into()));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) || !self.separation.is_finite() || !(self.init_scale >= 0.0) {
            return Err(Error::InvalidArgument("lr must be >= 0; separation and init_scale finite".into()));
        }
        if !(0.0..=1.0).contains(&self.p_err) {
            return Err(Error::InvalidArgument(format!("p_err must lie in [0, 1], got {}", self.p_err)));
        }
        Ok(())
    }

    /// Recorded iterations: every `record_every`, plus the last.
    pub fn recorded_iterations(&self) -> Vec<usize> {
        (0..=self.iterations).filter(|&i| i % self.record_every == 0 || i == self.iterations).collect()
    }
}

/// Per-trial logit trajectories (n = 1, p = K) and accuracies.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyRun {
    pub ensemble: TrialEnsemble,
    /// Accuracy against the (possibly corrupted) training labels.
    pub train_accuracy: Vec<f64>,
    /// Accuracy on a clean held-out set.
    pub val_accuracy: Vec<f64>,
}

impl ToyRun {
    pub fn mean_train_accuracy(&self) -> f64 {
        self.train_accuracy.iter().sum::<f64>() / self.train_accuracy.len() as f64
    }

    pub fn mean_val_accuracy(&self) -> f64 {
        self.val_accuracy.iter().sum::<f64>() / self.val_accuracy.len() as f64
    }
}

struct Sample {
    z: Vec<f64>,
    label: usize,
}

fn draw_set<R: Rng>(cfg: &ToyConfig, per_class: usize, p_err: f64, rng: &mut R) -> Vec<Sample> {
    let mut out = Vec::with_capacity(per_class * cfg.k);
    for class in 0..cfg.k {
        for _ in 0..per_class {
            let mut z: Vec<f64> = (0..cfg.q).map(|_| rng.sample(StandardNormal)).collect();
            z[class] += cfg.separation;
            let label = if p_err > 0.0 && rng.random::<f64>() < p_err {
                let other = rng.random_range(0..cfg.k - 1);
                if other >= class {
                    other + 1
                } else {
                    other
                }
            } else {
                class
            };
            out.push(Sample { z, label });
        }
    }
    out
}

fn logits(w: &[f64], k: usize, z: &[f64]) -> Vec<f64> {
    w.chunks_exact(z.len()).take(k).map(|row| crate::linalg::dot(row, z)).collect()
}

fn argmax(v: &[f64]) -> usize {
    v.iter().enumerate().fold(0, |best, (i, x)| if *x > v[best] { i } else { best })
}

fn accuracy(w: &[f64], k: usize, set: &[Sample]) -> f64 {
    let hits = set.iter().filter(|s| argmax(&logits(w, k, &s.z)) == s.label).count();
    hits as f64 / set.len() as f64
}

/// Trains `cfg.trials` independent models and records per-class mean logits
/// W·z̄_k (classes grouped by training label) at time t = iteration·lr.
pub fn toy_trainer(cfg: &ToyConfig, seed: u64) -> Result<ToyRun> {
    cfg.validate()?;
    let (k, q) = (cfg.k, cfg.q);
    let recorded = cfg.recorded_iterations();
    let grid: Vec<f64> = recorded.iter().map(|&i| i as f64 * cfg.lr).collect();
    let runs = run_indexed(cfg.trials, |trial| {
        let mut rng = trial_rng(seed, trial);
        let train = draw_set(cfg, cfg.per_class, cfg.p_err, &mut rng);
        let val = draw_set(cfg, cfg.val_per_class, 0.0, &mut rng);
        let mut centroids = vec![vec![0.0; q]; k];
        let mut counts = vec![0usize; k];
        for s in &train {
            counts[s.label] += 1;
            for (c, z) in centroids[s.label].iter_mut().zip(&s.z) {
                *c += z;
            }
        }
        for (c, &n) in centroids.iter_mut().zip(&counts) {
            if n > 0 {
                c.iter_mut().for_each(|v| *v /= n as f64);
            }
        }
        let mut w: Vec<f64> = (0..k * q).map(|_| cfg.init_scale * rng.sample::<f64, _>(StandardNormal)).collect();
        let snapshot = |w: &[f64], it: usize| -> FeatureEnsemble {
            let data = centroids.iter().flat_map(|c| logits(w, k, c)).collect();
            FeatureEnsemble { n: 1, k, p: k, data, t: it as f64 * cfg.lr, h: cfg.lr }
        };
        let mut snaps = Vec::with_capacity(recorded.len());
        let mut next = 0;
        if recorded[next] == 0 {
            snaps.push(snapshot(&w, 0));
            next += 1;
        }
        for it in 1..=cfg.iterations {
            let s = &train[rng.random_range(0..train.len())];
            let mut out = logits(&w, k, &s.z);
            let top = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut norm = 0.0;
            for o in out.iter_mut() {
                *o = (*o - top).exp();
                norm += *o;
            }
            out.iter_mut().for_each(|o| *o /= norm);
            let loss = -out[s.label].ln();
            if !(loss <= 1e6) {
                return Err(Error::Divergence { iteration: it, loss });
            }
            for (c, pc) in out.iter().enumerate() {
                let g = pc - if c == s.label { 1.0 } else { 0.0 };
                for (wv, z) in w[c * q..(c + 1) * q].iter_mut().zip(&s.z) {
                    *wv -= cfg.lr * g * z;
                }
            }
            if next < recorded.len() && recorded[next] == it {
                snaps.push(snapshot(&w, it));
                next += 1;
            }
        }
        Ok((snaps, accuracy(&w, k, &train), accuracy(&w, k, &val)))
    })?;
    let mut trials = Vec::with_capacity(runs.len());
    let mut train_accuracy = Vec::with_capacity(runs.len());
    let mut val_accuracy = Vec::with_capacity(runs.len());
    for (s, a, v) in runs {
        trials.push(s);
        train_accuracy.push(a);
        val_accuracy.push(v);
    }
    Ok(ToyRun {
        ensemble: TrialEnsemble { n: 1, k, p: k, grid, trials, seed: Some(seed) },
        train_accuracy,
        val_accuracy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_learning_rate_freezes_logits() {
        let mut cfg = ToyConfig::new(3, 4, 20, 3.0, 0.0, 0.0, 50);
        cfg.record_every = 10;
        let run = toy_trainer(&cfg, 3).unwrap();
        let first = &run.ensemble.trials[0][0].data;
        assert!(run.ensemble.trials[0].iter().all(|s| &s.data == first));
    }

    #[test]
    fn rejects_small_input_dimension() {
        assert!(toy_trainer(&ToyConfig::new(3, 2, 20, 3.0, 0.0, 0.1, 10), 1).is_err());
    }
}
