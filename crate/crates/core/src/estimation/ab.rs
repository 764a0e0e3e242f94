use serde::{Deserialize, Serialize};

use crate::dynamics::{MeanTrajectory, TrialEnsemble};
use crate::error::{Error, Result};

const DENOM_TOL: f64 = 1e-12;
const LOG_FLOOR: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimatorModel {
    I,
    L,
}

/// Estimated integrated strengths Â(t), B̂(t).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ABSeries {
    pub grid: Vec<f64>,
    pub a_hat: Vec<f64>,
    pub b_hat: Vec<f64>,
    pub model: EstimatorModel,
    /// Shared centre c₀ (identity-kernel estimator only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<Vec<f64>>,
    /// Stacked class offsets c_k (identity-kernel estimator only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    /// (class, coordinate) entries left out because c₀ or c_k vanishes there.
    pub skipped: usize,
    /// Points where a logged quantity changed sign relative to t = 0.
    pub sign_crossings: usize,
}

fn ln_abs(x: f64) -> f64 {
    x.abs().max(LOG_FLOOR).ln()
}

pub fn average_trials(ens: &TrialEnsemble) -> Result<MeanTrajectory> {
    ens.mean_trajectory()
}

/// Identity-kernel estimator. With X̌ the average of the class means, c₀ and
/// c_k read off at the first grid point:
/// Â = ⟨log|X̌ (X̄^k − X̌)^{K−1} / (c₀ c_k^{K−1})|⟩, B̂ = −⟨log|(c₀/c_k)(X̄^k − X̌)/X̌|⟩,
/// averaged over classes and coordinates.
pub fn estimate_ab_imodel(traj: &MeanTrajectory, k: usize) -> Result<ABSeries> {
    traj.validate()?;
    if k < 2 || traj.k != k {
        return Err(Error::DimensionMismatch(format!("trajectory has K = {}, estimator asked for K = {k}", traj.k)));
    }
    if traj.is_empty() {
        return Err(Error::GridMismatch("trajectory is empty".into()));
    }
    let p = traj.p;
    let kf = k as f64;
    let centre = |ti: usize| -> Vec<f64> { (0..p).map(|j| (0..k).map(|c| traj.means[ti][c * p + j]).sum::<f64>() / kf).collect() };
    let c0 = centre(0);
    let c: Vec<f64> = traj.means[0].iter().enumerate().map(|(i, v)| v - c0[i % p]).collect();

    let mut usable = Vec::new();
    for cl in 0..k {
        for j in 0..p {
            if c0[j].abs() >= DENOM_TOL && c[cl * p + j].abs() >= DENOM_TOL {
                usable.push((cl, j));
            }
        }
    }
    let skipped = k * p - usable.len();
    if usable.is_empty() {
        return Err(Error::DegenerateInit("every class offset or the shared centre vanishes".into()));
    }
    let count = usable.len() as f64;
    let mut a_hat = Vec::with_capacity(traj.len());
    let mut b_hat = Vec::with_capacity(traj.len());
    let mut sign_crossings = 0;
    for ti in 0..traj.len() {
        let xc = centre(ti);
        let (mut sa, mut sb) = (0.0, 0.0);
        let mut crossed = false;
        for &(cl, j) in &usable {
            let dev = traj.means[ti][cl * p + j] - xc[j];
            let ck = c[cl * p + j];
            if dev.signum() != ck.signum() || xc[j].signum() != c0[j].signum() {
                crossed = true;
            }
            let (l_centre, l_dev) = (ln_abs(xc[j]), ln_abs(dev));
            let (l_c0, l_ck) = (ln_abs(c0[j]), ln_abs(ck));
            sa += l_centre + (kf - 1.0) * l_dev - l_c0 - (kf - 1.0) * l_ck;
            sb -= l_c0 - l_ck + l_dev - l_centre;
        }
        if crossed {
            sign_crossings += 1;
        }
        a_hat.push(sa / count);
        b_hat.push(sb / count);
    }
    Ok(ABSeries {
        grid: traj.grid.clone(),
        a_hat,
        b_hat,
        model: EstimatorModel::I,
        c0: Some(c0),
        c: Some(c),
        skipped,
        sign_crossings,
    })
}

/// Projection vectors for the three-class logit-aligned estimator.
pub fn lmodel_projections() -> ([f64; 9], [f64; 9]) {
    let v1 = [1.0, -1.0, -1.0, -1.0, 1.0, -1.0, -2.0, -2.0, 0.0].map(|x| x / 4.0);
    let v2 = [2.0, -1.0, -1.0, -1.0, 2.0, -1.0, 0.0, 0.0, 0.0].map(|x| x / 3.0);
    (v1, v2)
}

/// Logit-aligned estimator for K = 3. With Y₁ = X̄ᵀv₁ − 1 and
/// Y₂ = X̄ᵀ(v₂ − 4/3·v₁), both normalised by their t = 0 values:
/// A′ = log|Y₁|, B′ = log|Y₂|, Â = A′ + 2B′, B̂ = 2(B′ − A′).
/// Exact only once the null-space part is negligible, i.e. at large t.
pub fn estimate_ab_lmodel(traj: &MeanTrajectory) -> Result<ABSeries> {
    traj.validate()?;
    if traj.k != 3 {
        return Err(Error::RequiresK3(traj.k));
    }
    if traj.p != 3 {
        return Err(Error::DimensionMismatch(format!("logit features need p = 3, got p = {}", traj.p)));
    }
    if traj.is_empty() {
        return Err(Error::GridMismatch("trajectory is empty".into()));
    }
    let (v1, v2) = lmodel_projections();
    let w: Vec<f64> = v2.iter().zip(&v1).map(|(b, a)| b - 4.0 / 3.0 * a).collect();
    let y1 = |x: &[f64]| crate::linalg::dot(x, &v1) - 1.0;
    let y2 = |x: &[f64]| crate::linalg::dot(x, &w);
    let (n1, n2) = (y1(&traj.means[0]), y2(&traj.means[0]));
    if n1.abs() < DENOM_TOL {
        return Err(Error::ZeroNormalizer(format!("first projection is {n1:e}")));
    }
    if n2.abs() < DENOM_TOL {
        return Err(Error::ZeroNormalizer(format!("second projection is {n2:e}")));
    }
    let mut a_hat = Vec::with_capacity(traj.len());
    let mut b_hat = Vec::with_capacity(traj.len());
    let mut sign_crossings = 0;
    for x in &traj.means {
        let (r1, r2) = (y1(x) / n1, y2(x) / n2);
        if r1 < 0.0 || r2 < 0.0 {
            sign_crossings += 1;
        }
        let (ap, bp) = (ln_abs(r1), ln_abs(r2));
        a_hat.push(ap + 2.0 * bp);
        b_hat.push(2.0 * (bp - ap));
    }
    Ok(ABSeries {
        grid: traj.grid.clone(),
        a_hat,
        b_hat,
        model: EstimatorModel::L,
        c0: None,
        c: None,
        skipped: 0,
        sign_crossings,
    })
}
