use serde::{Deserialize, Serialize};

use crate::dynamics::MeanTrajectory;
use crate::elasticity::{margin_direction, HKernel};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, Mat};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseReport {
    /// Cosines between class means.
    pub gram: Mat,
    /// Frobenius distance from the simplex equiangular frame Gram matrix.
    pub etf_deviation: f64,
    /// Cosine of each mean with its margin direction (only when p = K).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cosine_to_d: Option<Vec<f64>>,
}

/// Geometry of K class means given as the rows of a K×p matrix.
pub fn collapse_report(means: &Mat) -> Result<CollapseReport> {
    let k = means.rows();
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 class means, got {k}")));
    }
    let norms: Vec<f64> = (0..k).map(|i| norm2(means.row(i))).collect();
    if let Some(i) = norms.iter().position(|&n| !(n > 0.0)) {
        return Err(Error::ZeroMean(i));
    }
    let gram = Mat::from_fn(k, k, |i, j| if i == j { 1.0 } else { dot(means.row(i), means.row(j)) / (norms[i] * norms[j]) });
    let off = -1.0 / (k as f64 - 1.0);
    let etf_deviation = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .map(|(i, j)| (gram[(i, j)] - off).powi(2))
        .sum::<f64>()
        .sqrt();
    let cosine_to_d = (means.cols() == k).then(|| {
        (0..k)
            .map(|i| {
                let d = margin_direction(k, i);
                dot(means.row(i), &d) / (norms[i] * norm2(&d))
            })
            .collect()
    });
    Ok(CollapseReport { gram, etf_deviation, cosine_to_d })
}

/// Class means of a trajectory at grid index `ti` as a K×p matrix.
pub fn means_at(traj: &MeanTrajectory, ti: usize) -> Mat {
    Mat::from_fn(traj.k, traj.p, |k, j| traj.class_mean(ti, k)[j])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RdSeries {
    pub grid: Vec<f64>,
    /// `rd[k][t]`.
    pub rd: Vec<Vec<f64>>,
    /// Points where both means vanish; RD is reported as 0 there.
    pub zero_denominators: usize,
}

impl RdSeries {
    /// Mean RD of class k over grid points with t ≥ `from`.
    pub fn tail_mean(&self, k: usize, from: f64) -> f64 {
        let v: Vec<f64> = self.grid.iter().zip(&self.rd[k]).filter(|(t, _)| **t >= from).map(|(_, r)| *r).collect();
        v.iter().sum::<f64>() / v.len().max(1) as f64
    }
}

/// RD_k(t) = ‖X̄^k − Ȳ^k‖_{H^k} / ((‖X̄^k‖ + ‖Ȳ^k‖)/2).
pub fn relative_difference(genuine: &MeanTrajectory, simulated: &MeanTrajectory, kernel: &HKernel) -> Result<RdSeries> {
    genuine.validate()?;
    simulated.validate()?;
    if genuine.grid.len() != simulated.grid.len()
        || genuine.grid.iter().zip(&simulated.grid).any(|(a, b)| (a - b).abs() > 1e-9 * a.abs().max(1.0))
    {
        return Err(Error::GridMismatch("trajectories are on different grids".into()));
    }
    if (genuine.k, genuine.p) != (simulated.k, simulated.p) || kernel.p() != genuine.p {
        return Err(Error::DimensionMismatch("trajectories and kernel disagree on K or p".into()));
    }
    let mut zero_denominators = 0;
    let rd = (0..genuine.k)
        .map(|k| {
            (0..genuine.len())
                .map(|ti| {
                    let x = genuine.class_mean(ti, k);
                    let y = simulated.class_mean(ti, k);
                    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
                    let denom = 0.5 * (norm2(x) + norm2(y));
                    if denom == 0.0 {
                        zero_denominators += 1;
                        0.0
                    } else {
                        kernel.seminorm(k, &diff) / denom
                    }
                })
                .collect()
        })
        .collect();
    Ok(RdSeries { grid: genuine.grid.clone(), rd, zero_denominators })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margins_form_the_frame() {
        let m = Mat::from_fn(3, 3, |i, j| margin_direction(3, i)[j]);
        let r = collapse_report(&m).unwrap();
        assert!(r.etf_deviation < 1e-15);
        assert!((r.gram[(0, 1)] + 0.5).abs() < 1e-15);
        assert!(r.cosine_to_d.unwrap().iter().all(|c| (c - 1.0).abs() < 1e-15));
    }

    #[test]
    fn orthonormal_means_deviation() {
        let r = collapse_report(&Mat::identity(3)).unwrap();
        assert!((r.etf_deviation - 1.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_mean_rejected() {
        let m = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]);
        assert_eq!(collapse_report(&m).unwrap_err(), Error::ZeroMean(1));
    }
}
