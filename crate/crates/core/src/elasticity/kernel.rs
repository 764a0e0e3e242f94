use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, spectral_norm, Mat};

const SYMMETRY_TOL: f64 = 1e-12;
pub(crate) const PSD_TOL: f64 = 1e-10;

/// K×K matrix of pairwise elasticity strengths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum EffectMatrix {
    /// α on the diagonal, β off it: (α−β)I + β11ᵀ.
    TwoValue { k: usize, alpha: f64, beta: f64 },
    GeneralSymmetric { matrix: Mat },
}

impl EffectMatrix {
    pub fn two_value(k: usize, alpha: f64, beta: f64) -> Self {
        EffectMatrix::TwoValue { k, alpha, beta }
    }

    /// Validates symmetry and stores the exactly symmetrised matrix.
    pub fn general(matrix: Mat) -> Result<Self> {
        let e = EffectMatrix::GeneralSymmetric { matrix };
        e.validate()?;
        let EffectMatrix::GeneralSymmetric { matrix } = e else { unreachable!() };
        let sym = Mat::from_fn(matrix.rows(), matrix.cols(), |i, j| 0.5 * (matrix[(i, j)] + matrix[(j, i)]));
        Ok(EffectMatrix::GeneralSymmetric { matrix: sym })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EffectMatrix::TwoValue { k, alpha, beta } => {
                if *k < 2 {
                    return Err(Error::InvalidArgument(format!("need at least 2 classes, got {k}")));
                }
                if !alpha.is_finite() || !beta.is_finite() {
                    return Err(Error::InvalidArgument("effect strengths must be finite".into()));
                }
            }
            EffectMatrix::GeneralSymmetric { matrix } => {
                if !matrix.is_square() || matrix.rows() < 2 {
                    return Err(Error::DimensionMismatch("effect matrix must be square with K >= 2".into()));
                }
                if !matrix.is_finite() {
                    return Err(Error::InvalidArgument("effect matrix has non-finite entries".into()));
                }
                if !matrix.is_symmetric(SYMMETRY_TOL) {
                    return Err(Error::InvalidArgument("effect matrix is not symmetric".into()));
                }
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        match self {
            EffectMatrix::TwoValue { k, .. } => *k,
            EffectMatrix::GeneralSymmetric { matrix } => matrix.rows(),
        }
    }

    pub fn entry(&self, k: usize, l: usize) -> f64 {
        match self {
            EffectMatrix::TwoValue { alpha, beta, .. } => {
                if k == l {
                    *alpha
                } else {
                    *beta
                }
            }
            EffectMatrix::GeneralSymmetric { matrix } => matrix[(k, l)],
        }
    }

    pub fn to_mat(&self) -> Mat {
        let k = self.k();
        Mat::from_fn(k, k, |i, j| self.entry(i, j))
    }
}

/// Per-class-pair linear maps applied to features in the drift.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum HKernel {
    /// Every block is I_p.
    Identity { p: usize },
    /// Features are logits (p = K); block (k, l) projects onto the margin
    /// direction d_l = e_l − 1/K.
    LogitAligned { k: usize },
    /// Arbitrary PSD Kp×Kp matrix.
    CustomPsd { p: usize, matrix: Mat },
}

impl HKernel {
    pub fn custom(p: usize, matrix: Mat) -> Result<Self> {
        let h = HKernel::CustomPsd { p, matrix };
        h.validate()?;
        Ok(h)
    }

    pub fn p(&self) -> usize {
        match self {
            HKernel::Identity { p } | HKernel::CustomPsd { p, .. } => *p,
            HKernel::LogitAligned { k } => *k,
        }
    }

    /// Class count the kernel is tied to, if any.
    pub fn k(&self) -> Option<usize> {
        match self {
            HKernel::Identity { .. } => None,
            HKernel::LogitAligned { k } => Some(*k),
            HKernel::CustomPsd { p, matrix } => Some(matrix.rows() / (*p).max(1)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            HKernel::Identity { p } => {
                if *p == 0 {
                    return Err(Error::InvalidArgument("feature dimension must be >= 1".into()));
                }
            }
            HKernel::LogitAligned { k } => {
                if *k < 2 {
                    return Err(Error::InvalidArgument(format!("need at least 2 classes, got {k}")));
                }
            }
            HKernel::CustomPsd { p, matrix } => {
                if *p == 0 || !matrix.is_square() || matrix.rows() % p != 0 || matrix.rows() / p < 2 {
                    return Err(Error::DimensionMismatch(format!(
                        "custom kernel of size {}x{} is not Kp x Kp for p = {p}",
                        matrix.rows(),
                        matrix.cols()
                    )));
                }
                if !matrix.is_finite() || !matrix.is_symmetric(SYMMETRY_TOL) {
                    return Err(Error::NotPsd("custom kernel is not a finite symmetric matrix".into()));
                }
                if matrix.diagonal().iter().any(|&d| d <= 0.0) {
                    return Err(Error::NotPsd("custom kernel has a non-positive diagonal entry".into()));
                }
                check_psd(matrix, "custom kernel")?;
            }
        }
        Ok(())
    }

    /// The p×p block H_{k,l}.
    pub fn block(&self, k: usize, l: usize) -> Mat {
        match self {
            HKernel::Identity { p } => Mat::identity(*p),
            HKernel::LogitAligned { k: classes } => margin_projection(*classes, l),
            HKernel::CustomPsd { p, matrix } => matrix.block(k, l, *p),
        }
    }

    /// The full Kp×Kp block matrix for `k` classes.
    pub fn full_matrix(&self, k: usize) -> Mat {
        let p = self.p();
        let blocks: Vec<Vec<Mat>> = (0..k).map(|a| (0..k).map(|b| self.block(a, b)).collect()).collect();
        Mat::from_fn(k * p, k * p, |i, j| blocks[i / p][j / p][(i % p, j % p)])
    }

    /// ‖v‖ under class `k`'s diagonal block: the Euclidean norm for the
    /// identity kernel, |⟨d_k, v⟩|/‖d_k‖ for the logit-aligned one.
    pub fn seminorm(&self, k: usize, v: &[f64]) -> f64 {
        match self {
            HKernel::Identity { .. } => crate::linalg::norm2(v),
            HKernel::LogitAligned { k: classes } => {
                let d = margin_direction(*classes, k);
                crate::linalg::dot(&d, v).abs() / crate::linalg::norm2(&d)
            }
            HKernel::CustomPsd { .. } => {
                let h = self.block(k, k);
                crate::linalg::dot(v, &h.matvec(v)).max(0.0).sqrt()
            }
        }
    }
}

/// d_j = e_j − 1/K.
pub fn margin_direction(k: usize, j: usize) -> Vec<f64> {
    let inv = 1.0 / k as f64;
    (0..k).map(|i| if i == j { 1.0 - inv } else { -inv }).collect()
}

/// Rank-one projection d_j d_jᵀ/‖d_j‖².
pub fn margin_projection(k: usize, j: usize) -> Mat {
    let d = margin_direction(k, j);
    let n2 = crate::linalg::dot(&d, &d);
    Mat::from_fn(k, k, |a, b| d[a] * d[b] / n2)
}

/// Concatenation (d_0, …, d_{K−1}) ∈ R^{K²}.
pub fn stacked_margins(k: usize) -> Vec<f64> {
    (0..k).flat_map(|j| margin_direction(k, j)).collect()
}

pub(crate) fn check_psd(m: &Mat, what: &str) -> Result<()> {
    let eig = symmetric_eigen(m)?;
    let floor = -PSD_TOL * spectral_norm(m).max(f64::MIN_POSITIVE);
    match eig.values.first() {
        Some(&lo) if lo < floor => Err(Error::NotPsd(format!("{what} has eigenvalue {lo:e}"))),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margin_projection_is_idempotent_with_unit_norm() {
        for k in 2..6 {
            for j in 0..k {
                let h = margin_projection(k, j);
                let h2 = h.matmul(&h);
                assert!(h2.sub(&h).max_abs() < 1e-15);
                assert!((spectral_norm(&h) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn custom_kernel_checks() {
        let bad = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(matches!(HKernel::custom(1, bad), Err(Error::NotPsd(_))));
        let zero_diag = Mat::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0]]);
        assert!(matches!(HKernel::custom(1, zero_diag), Err(Error::NotPsd(_))));
        let ok = Mat::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]);
        assert!(HKernel::custom(1, ok).is_ok());
    }

    #[test]
    fn general_effect_requires_symmetry() {
        let m = Mat::from_rows(&[vec![1.0, 0.2], vec![0.3, 1.0]]);
        assert!(EffectMatrix::general(m).is_err());
    }

    #[test]
    fn logit_seminorm_matches_projection() {
        let h = HKernel::LogitAligned { k: 3 };
        let v = [0.3, -1.2, 2.0];
        let proj = margin_projection(3, 1);
        let direct = crate::linalg::dot(&v, &proj.matvec(&v)).sqrt();
        assert!((h.seminorm(1, &v) - direct).abs() < 1e-14);
    }
}
