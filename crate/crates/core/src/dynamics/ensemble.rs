use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Mat};

/// n samples per class, K classes, p features: `data[(i·K + k)·p + j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureEnsemble {
    pub n: usize,
    pub k: usize,
    pub p: usize,
    pub data: Vec<f64>,
    pub t: f64,
    pub h: f64,
}

impl FeatureEnsemble {
    pub fn new(n: usize, k: usize, p: usize, data: Vec<f64>, t: f64, h: f64) -> Result<Self> {
        let e = FeatureEnsemble { n, k, p, data, t, h };
        e.validate()?;
        Ok(e)
    }

    pub fn zeros(n: usize, k: usize, p: usize) -> Self {
        FeatureEnsemble { n, k, p, data: vec![0.0; n * k * p], t: 0.0, h: 0.0 }
    }

    /// Every sample of class k placed at its class mean.
    pub fn from_means(n: usize, k: usize, p: usize, means: &[f64]) -> Result<Self> {
        if means.len() != k * p {
            return Err(Error::DimensionMismatch(format!("{} mean entries for K·p = {}", means.len(), k * p)));
        }
        let data = (0..n).flat_map(|_| means.iter().copied()).collect();
        FeatureEnsemble::new(n, k, p, data, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k < 2 || self.p == 0 {
            return Err(Error::DimensionMismatch(format!(
                "ensemble needs n >= 1, K >= 2, p >= 1 (got n={}, K={}, p={})",
                self.n, self.k, self.p
            )));
        }
        if self.data.len() != self.n * self.k * self.p {
            return Err(Error::DimensionMismatch(format!(
                "{} values for n·K·p = {}",
                self.data.len(),
                self.n * self.k * self.p
            )));
        }
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("ensemble has non-finite entries".into()));
        }
        Ok(())
    }

    /// Feature vector of sample i in class k.
    pub fn sample(&self, i: usize, k: usize) -> &[f64] {
        let o = (i * self.k + k) * self.p;
        &self.data[o..o + self.p]
    }

    /// Stacked class means X̄ ∈ R^{Kp}.
    pub fn class_means(&self) -> Vec<f64> {
        let kp = self.k * self.p;
        let mut m = vec![0.0; kp];
        for chunk in self.data.chunks_exact(kp) {
            for (a, b) in m.iter_mut().zip(chunk) {
                *a += b;
            }
        }
        let inv = 1.0 / self.n as f64;
        m.iter_mut().for_each(|v| *v *= inv);
        m
    }

    /// n×p matrix of the samples of class k.
    pub fn class_samples(&self, k: usize) -> Mat {
        Mat::from_fn(self.n, self.p, |i, j| self.sample(i, k)[j])
    }
}

/// Snapshots of every trial on a shared time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialEnsemble {
    pub n: usize,
    pub k: usize,
    pub p: usize,
    pub grid: Vec<f64>,
    /// `trials[trial][time index]`.
    pub trials: Vec<Vec<FeatureEnsemble>>,
    pub seed: Option<u64>,
}

impl TrialEnsemble {
    pub fn validate(&self) -> Result<()> {
        if self.trials.is_empty() {
            return Err(Error::GridMismatch("ensemble has no trials".into()));
        }
        check_grid(&self.grid)?;
        for (ti, trial) in self.trials.iter().enumerate() {
            if trial.len() != self.grid.len() {
                return Err(Error::GridMismatch(format!(
                    "trial {ti} has {} snapshots for a grid of {}",
                    trial.len(),
                    self.grid.len()
                )));
            }
            for (snap, &t) in trial.iter().zip(&self.grid) {
                if (snap.n, snap.k, snap.p) != (self.n, self.k, self.p) {
                    return Err(Error::GridMismatch(format!("trial {ti} changes shape")));
                }
                if snap.t != t {
                    return Err(Error::GridMismatch(format!("trial {ti} snapshot at t = {} off grid", snap.t)));
                }
            }
        }
        Ok(())
    }

    /// Average over trials and over the n samples of each class.
    pub fn mean_trajectory(&self) -> Result<MeanTrajectory> {
        self.validate()?;
        let kp = self.k * self.p;
        let inv = 1.0 / self.trials.len() as f64;
        let means = (0..self.grid.len())
            .map(|ti| {
                let mut acc = vec![0.0; kp];
                for trial in &self.trials {
                    for (a, b) in acc.iter_mut().zip(trial[ti].class_means()) {
                        *a += b;
                    }
                }
                acc.iter_mut().for_each(|v| *v *= inv);
                acc
            })
            .collect();
        Ok(MeanTrajectory { grid: self.grid.clone(), k: self.k, p: self.p, means })
    }
}

/// Per-class means X̄^k(t) over a time grid; `means[t]` is the stacked Kp vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanTrajectory {
    pub grid: Vec<f64>,
    pub k: usize,
    pub p: usize,
    pub means: Vec<Vec<f64>>,
}

impl MeanTrajectory {
    pub fn new(grid: Vec<f64>, k: usize, p: usize, means: Vec<Vec<f64>>) -> Result<Self> {
        let m = MeanTrajectory { grid, k, p, means };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        check_grid(&self.grid)?;
        if self.means.len() != self.grid.len() {
            return Err(Error::GridMismatch(format!("{} mean rows for {} grid points", self.means.len(), self.grid.len())));
        }
        if self.means.iter().any(|m| m.len() != self.k * self.p) {
            return Err(Error::DimensionMismatch(format!("mean rows must have K·p = {} entries", self.k * self.p)));
        }
        if self.means.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("trajectory has non-finite values".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn class_mean(&self, ti: usize, k: usize) -> &[f64] {
        &self.means[ti][k * self.p..(k + 1) * self.p]
    }

    /// Index of the grid point closest to t.
    pub fn nearest_index(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, &g) in self.grid.iter().enumerate() {
            if (g - t).abs() < (self.grid[best] - t).abs() {
                best = i;
            }
        }
        best
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::GridMismatch("time grid has non-finite values".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::GridMismatch("time grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Per-sample noise covariance Σ on the stacked Kp feature vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum NoiseSpec {
    Isotropic { sigma: f64 },
    /// Standard deviation per stacked coordinate.
    Diagonal { sigmas: Vec<f64> },
    FullCovariance { matrix: Mat },
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec::Isotropic { sigma: 0.0 }
    }

    /// Validate against dimension Kp and precompute Σ^{1/2}.
    pub fn prepare(&self, dim: usize) -> Result<NoiseSampler> {
        match self {
            NoiseSpec::Isotropic { sigma } => {
                if !(sigma.is_finite() && *sigma >= 0.0) {
                    return Err(Error::InvalidArgument(format!("noise sigma must be finite and >= 0, got {sigma}")));
                }
                Ok(if *sigma == 0.0 { NoiseSampler::Zero } else { NoiseSampler::Isotropic(*sigma) })
            }
            NoiseSpec::Diagonal { sigmas } => {
                if sigmas.len() != dim {
                    return Err(Error::DimensionMismatch(format!("{} noise scales for dimension {dim}", sigmas.len())));
                }
                if sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
                    return Err(Error::InvalidArgument("noise scales must be finite and >= 0".into()));
                }
                Ok(NoiseSampler::Diagonal(sigmas.clone()))
            }
            NoiseSpec::FullCovariance { matrix } => {
                if matrix.rows() != dim || !matrix.is_square() {
                    return Err(Error::DimensionMismatch(format!(
                        "covariance is {}x{}, need {dim}x{dim}",
                        matrix.rows(),
                        matrix.cols()
                    )));
                }
                if !matrix.is_symmetric(1e-12) {
                    return Err(Error::NotPsd("covariance is not symmetric".into()));
                }
                crate::elasticity::check_psd(matrix, "noise covariance")?;
                let eig = symmetric_eigen(matrix)?;
                let roots: Vec<f64> = eig.values.iter().map(|v| v.max(0.0).sqrt()).collect();
                let v = &eig.vectors;
                let sqrt = Mat::from_fn(dim, dim, |i, j| (0..dim).map(|c| v[(i, c)] * roots[c] * v[(j, c)]).sum());
                Ok(NoiseSampler::Full(sqrt))
            }
        }
    }
}

/// Draws Σ^{1/2}ξ.
#[derive(Clone, Debug)]
pub enum NoiseSampler {
    Zero,
    Isotropic(f64),
    Diagonal(Vec<f64>),
    Full(Mat),
}

impl NoiseSampler {
    pub fn is_zero(&self) -> bool {
        matches!(self, NoiseSampler::Zero)
    }

    /// Adds `scale · Σ^{1/2}ξ` to `out`.
    pub fn add_sample<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64, out: &mut [f64]) {
        match self {
            NoiseSampler::Zero => {}
            NoiseSampler::Isotropic(s) => {
                for v in out.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *v += scale * s * z;
                }
            }
            NoiseSampler::Diagonal(s) => {
                for (v, si) in out.iter_mut().zip(s) {
                    let z: f64 = rng.sample(StandardNormal);
                    *v += scale * si * z;
                }
            }
            NoiseSampler::Full(root) => {
                let xi: Vec<f64> = (0..out.len()).map(|_| rng.sample(StandardNormal)).collect();
                for (i, v) in out.iter_mut().enumerate() {
                    *v += scale * crate::linalg::dot(root.row(i), &xi);
                }
            }
        }
    }
}

/// Initial ensemble: fixed, or sampled per trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum InitSpec {
    /// i.i.d. Gaussian coordinates around per-class means (stacked Kp vector).
    Gaussian { n: usize, means: Vec<f64>, sd: f64 },
    #[serde(skip)]
    Fixed(FeatureEnsemble),
}

impl InitSpec {
    pub fn n(&self) -> usize {
        match self {
            InitSpec::Gaussian { n, .. } => *n,
            InitSpec::Fixed(e) => e.n,
        }
    }

    pub fn validate(&self, k: usize, p: usize) -> Result<()> {
        match self {
            InitSpec::Gaussian { n, means, sd } => {
                if *n == 0 {
                    return Err(Error::InvalidArgument("need at least one sample per class".into()));
                }
                if means.len() != k * p {
                    return Err(Error::DimensionMismatch(format!("{} initial means for K·p = {}", means.len(), k * p)));
                }
                if !(sd.is_finite() && *sd >= 0.0) || means.iter().any(|m| !m.is_finite()) {
                    return Err(Error::InvalidArgument("initial means and sd must be finite, sd >= 0".into()));
                }
                Ok(())
            }
            InitSpec::Fixed(e) => {
                e.validate()?;
                if (e.k, e.p) != (k, p) {
                    return Err(Error::DimensionMismatch(format!(
                        "initial ensemble has K={}, p={}; drift has K={k}, p={p}",
                        e.k, e.p
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, k: usize, p: usize, rng: &mut R) -> FeatureEnsemble {
        match self {
            InitSpec::Fixed(e) => FeatureEnsemble { t: 0.0, ..e.clone() },
            InitSpec::Gaussian { n, means, sd } => {
                let mut data = Vec::with_capacity(n * k * p);
                for _ in 0..*n {
                    for m in means {
                        let z: f64 = if *sd > 0.0 { rng.sample(StandardNormal) } else { 0.0 };
                        data.push(m + sd * z);
                    }
                }
                FeatureEnsemble { n: *n, k, p, data, t: 0.0, h: 0.0 }
            }
        }
    }
}

impl From<FeatureEnsemble> for InitSpec {
    fn from(e: FeatureEnsemble) -> Self {
        InitSpec::Fixed(e)
    }
}
