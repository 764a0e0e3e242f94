use serde::{Deserialize, Serialize};

use super::kernel::HKernel;
use crate::error::{Error, Result};
use crate::linalg::{eigenspace_basis, general_eigenvalues, norm2, spectral_norm, symmetric_eigen, Mat};

/// Eigenvalues with algebraic multiplicity, ascending.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<(f64, usize)>,
    /// (eigenvalue, unit eigenvector) pairs when computed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvectors: Option<Vec<(f64, Vec<f64>)>>,
    /// max ‖Mv − λv‖₂ over the returned eigenvectors.
    pub max_residual: f64,
    /// Some eigenvalue has fewer independent eigenvectors than its multiplicity.
    pub defective: bool,
}

impl Spectrum {
    /// Eigenvalues repeated by multiplicity.
    pub fn expanded(&self) -> Vec<f64> {
        self.eigenvalues.iter().flat_map(|&(v, m)| std::iter::repeat_n(v, m)).collect()
    }

    pub fn dimension(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.1).sum()
    }

    pub fn scaled(&self, s: f64) -> Spectrum {
        let mut eigenvalues: Vec<(f64, usize)> = self.eigenvalues.iter().map(|&(v, m)| (v * s, m)).collect();
        eigenvalues.sort_by(|a, b| a.0.total_cmp(&b.0));
        Spectrum {
            eigenvalues,
            eigenvectors: self.eigenvectors.as_ref().map(|v| v.iter().map(|(l, x)| (l * s, x.clone())).collect()),
            max_residual: self.max_residual * s.abs(),
            defective: self.defective,
        }
    }
}

/// Kernels whose spectrum is known in closed form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelModel {
    IModel,
    LModel,
}

impl KernelModel {
    pub fn of(kernel: &HKernel) -> Result<Self> {
        match kernel {
            HKernel::Identity { .. } => Ok(KernelModel::IModel),
            HKernel::LogitAligned { .. } => Ok(KernelModel::LModel),
            HKernel::CustomPsd { .. } => Err(Error::UnsupportedModel(
                "no closed form for a custom kernel; use the numeric spectrum".into(),
            )),
        }
    }
}

/// Spectrum of the undivided matrix (E⊗I_p)∘H for two-value E. Divide by K
/// to obtain the uniform-sampling drift spectrum.
pub fn closed_form_spectrum(model: KernelModel, alpha: f64, beta: f64, k: usize, p: usize) -> Result<Spectrum> {
    if k < 2 || p == 0 {
        return Err(Error::InvalidArgument(format!("need K >= 2 and p >= 1, got K = {k}, p = {p}")));
    }
    let kf = k as f64;
    let raw = match model {
        KernelModel::IModel => vec![(alpha - beta, p * (k - 1)), (alpha + (kf - 1.0) * beta, p)],
        KernelModel::LModel => {
            if p != k {
                return Err(Error::DimensionMismatch(format!("logit-aligned kernel needs p = K, got p = {p}, K = {k}")));
            }
            vec![(alpha - beta, 1), (0.0, k * (k - 1)), (alpha + beta / (kf - 1.0), k - 1)]
        }
    };
    Ok(Spectrum { eigenvalues: merge(raw, 1e-12), eigenvectors: None, max_residual: 0.0, defective: false })
}

fn merge(mut vals: Vec<(f64, usize)>, rel: f64) -> Vec<(f64, usize)> {
    vals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.0.abs())).max(1.0);
    let mut out: Vec<(f64, usize)> = Vec::new();
    for (v, m) in vals {
        match out.last_mut() {
            Some(last) if (v - last.0).abs() <= rel * scale => last.1 += m,
            _ => out.push((v, m)),
        }
    }
    out
}

/// Full eigendecomposition of a real matrix with real spectrum.
pub fn numeric_spectrum(m: &Mat) -> Result<Spectrum> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("{}x{} matrix is not square", m.rows(), m.cols())));
    }
    if !m.is_finite() {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let n = m.rows();
    let norm = spectral_norm(m);
    let resid_tol = 1e-8 * norm;
    let cluster_tol = 1e-6 * norm.max(f64::MIN_POSITIVE);

    if m.is_symmetric(1e-14) {
        let eig = symmetric_eigen(m)?;
        let clusters = cluster(&eig.values, cluster_tol);
        let mut vectors = Vec::with_capacity(n);
        let mut idx = 0;
        for &(lambda, mult) in &clusters {
            for c in idx..idx + mult {
                vectors.push((lambda, eig.vectors.column(c)));
            }
            idx += mult;
        }
        let max_residual = max_residual(m, &vectors);
        return Ok(Spectrum { eigenvalues: clusters, eigenvectors: Some(vectors), max_residual, defective: false });
    }

    let pairs = general_eigenvalues(m)?;
    let imag_tol = 1e-10 * norm;
    if let Some(&(re, im)) = pairs.iter().find(|p| p.1.abs() > imag_tol) {
        return Err(Error::ComplexEigenvalue { re, im });
    }
    let mut re: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    re.sort_by(f64::total_cmp);
    let clusters = cluster(&re, cluster_tol);
    let mut vectors = Vec::with_capacity(n);
    let mut defective = false;
    for &(lambda, mult) in &clusters {
        let basis = eigenspace_basis(m, lambda, mult, resid_tol.max(1e-300));
        if basis.len() < mult {
            defective = true;
        }
        vectors.extend(basis.into_iter().map(|v| (lambda, v)));
    }
    let max_residual = max_residual(m, &vectors);
    Ok(Spectrum { eigenvalues: clusters, eigenvectors: Some(vectors), max_residual, defective })
}

/// Groups sorted values whose consecutive gaps are below `tol`; reports means.
fn cluster(sorted: &[f64], tol: f64) -> Vec<(f64, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] - sorted[j - 1] <= tol {
            j += 1;
        }
        let mean = sorted[i..j].iter().sum::<f64>() / (j - i) as f64;
        out.push((mean, j - i));
        i = j;
    }
    out
}

fn max_residual(m: &Mat, vectors: &[(f64, Vec<f64>)]) -> f64 {
    vectors
        .iter()
        .map(|(l, v)| {
            let mv = m.matvec(v);
            norm2(&mv.iter().zip(v).map(|(a, b)| a - l * b).collect::<Vec<_>>())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        let s = closed_form_spectrum(KernelModel::IModel, 2.0, -1.0, 3, 1).unwrap();
        assert_eq!(s.eigenvalues, vec![(0.0, 1), (3.0, 2)]);
        let s = closed_form_spectrum(KernelModel::LModel, 2.0, 1.0, 3, 3).unwrap();
        assert_eq!(s.eigenvalues, vec![(0.0, 6), (1.0, 1), (2.5, 2)]);
        let s = closed_form_spectrum(KernelModel::LModel, 1.5, 1.5, 3, 3).unwrap();
        assert_eq!(s.eigenvalues[0], (0.0, 7));
    }

    #[test]
    fn custom_kernel_has_no_closed_form() {
        let h = HKernel::CustomPsd { p: 1, matrix: Mat::identity(2) };
        assert!(matches!(KernelModel::of(&h), Err(Error::UnsupportedModel(_))));
    }

    #[test]
    fn identity_spectrum() {
        let s = numeric_spectrum(&Mat::identity(3)).unwrap();
        assert_eq!(s.eigenvalues, vec![(1.0, 3)]);
        assert!(!s.defective);
    }

    #[test]
    fn nilpotent_is_defective() {
        let s = numeric_spectrum(&Mat::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]])).unwrap();
        assert_eq!(s.eigenvalues.len(), 1);
        assert_eq!(s.eigenvalues[0].1, 2);
        assert!(s.eigenvalues[0].0.abs() < 1e-12);
        assert!(s.defective);
    }

    #[test]
    fn rotation_is_rejected() {
        let r = numeric_spectrum(&Mat::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]));
        assert!(matches!(r, Err(Error::ComplexEigenvalue { .. })));
    }
}
