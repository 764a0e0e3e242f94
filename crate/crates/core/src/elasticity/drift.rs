use serde::{Deserialize, Serialize};

use super::kernel::{check_psd, EffectMatrix, HKernel};
use super::schedule::ElasticitySchedule;
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Mat};

/// Everything needed to assemble the Kp×Kp drift matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSpec {
    pub effect: EffectMatrix,
    pub kernel: HKernel,
    /// Class sampling probabilities; empty means uniform.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sampling: Vec<f64>,
}

impl DriftSpec {
    pub fn new(effect: EffectMatrix, kernel: HKernel) -> Self {
        DriftSpec { effect, kernel, sampling: Vec::new() }
    }

    pub fn with_sampling(mut self, sampling: Vec<f64>) -> Self {
        self.sampling = sampling;
        self
    }

    /// Two-value effect with identity blocks.
    pub fn imodel(k: usize, p: usize, alpha: f64, beta: f64) -> Self {
        DriftSpec::new(EffectMatrix::two_value(k, alpha, beta), HKernel::Identity { p })
    }

    /// Two-value effect with logit-aligned blocks (p = K).
    pub fn lmodel(k: usize, alpha: f64, beta: f64) -> Self {
        DriftSpec::new(EffectMatrix::two_value(k, alpha, beta), HKernel::LogitAligned { k })
    }

    pub fn k(&self) -> usize {
        self.effect.k()
    }

    pub fn p(&self) -> usize {
        self.kernel.p()
    }

    pub fn dim(&self) -> usize {
        self.k() * self.p()
    }

    pub fn sampling_probs(&self) -> Vec<f64> {
        if self.sampling.is_empty() {
            vec![1.0 / self.k() as f64; self.k()]
        } else {
            self.sampling.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.effect.validate()?;
        self.kernel.validate()?;
        let k = self.k();
        if let Some(kk) = self.kernel.k() {
            if kk != k {
                return Err(Error::DimensionMismatch(format!("kernel is built for K = {kk}, effect for K = {k}")));
            }
        }
        if !self.sampling.is_empty() {
            if self.sampling.len() != k {
                return Err(Error::DimensionMismatch(format!(
                    "{} sampling probabilities for K = {k}",
                    self.sampling.len()
                )));
            }
            let sum: f64 = self.sampling.iter().sum();
            if self.sampling.iter().any(|&s| !(s >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument("sampling must be a probability vector".into()));
            }
        }
        Ok(())
    }

    /// Same kernel and sampling with the two-value strengths replaced.
    /// General effect matrices are returned unchanged.
    pub fn with_strengths(&self, alpha: f64, beta: f64) -> DriftSpec {
        let mut out = self.clone();
        if let EffectMatrix::TwoValue { k, .. } = self.effect {
            out.effect = EffectMatrix::TwoValue { k, alpha, beta };
        }
        out
    }

    /// Drift at time t: two-value strengths follow the schedule.
    pub fn drift_at(&self, sched: &ElasticitySchedule, t: f64) -> Result<Mat> {
        match self.effect {
            EffectMatrix::TwoValue { .. } => {
                let (a, b) = sched.eval(t)?;
                build_drift(&self.with_strengths(a, b))
            }
            EffectMatrix::GeneralSymmetric { .. } => build_drift(self),
        }
    }
}

/// Block (k, l) = E_{k,l} · H_{k,l} · sampling_l.
pub fn build_drift(spec: &DriftSpec) -> Result<Mat> {
    spec.validate()?;
    let (k, p) = (spec.k(), spec.p());
    let probs = spec.sampling_probs();
    let mut m = Mat::zeros(k * p, k * p);
    for bk in 0..k {
        for bl in 0..k {
            let w = spec.effect.entry(bk, bl) * probs[bl];
            if w == 0.0 {
                continue;
            }
            let h = spec.kernel.block(bk, bl);
            for i in 0..p {
                for j in 0..p {
                    m[(bk * p + i, bl * p + j)] = w * h[(i, j)];
                }
            }
        }
    }
    Ok(m)
}

/// (E⊗I_p)∘H, the Hadamard product of the block-expanded effect matrix and
/// the full kernel matrix.
pub fn schur_product(effect: &EffectMatrix, kernel: &HKernel) -> Result<Mat> {
    let k = effect.k();
    if let Some(kk) = kernel.k() {
        if kk != k {
            return Err(Error::DimensionMismatch(format!("kernel is built for K = {kk}, effect for K = {k}")));
        }
    }
    let expanded = effect.to_mat().kron(&Mat::identity(kernel.p()));
    Ok(expanded.hadamard(&kernel.full_matrix(k)))
}

/// Interval containing every eigenvalue of (E⊗I_p)∘H when E and H are PSD:
/// [λ_min(E)·min H_ii, λ_max(E)·max H_ii].
pub fn schur_bounds(effect: &EffectMatrix, kernel: &HKernel) -> Result<(f64, f64)> {
    effect.validate()?;
    let k = effect.k();
    let e = effect.to_mat();
    check_psd(&e, "effect matrix")?;
    let h = kernel.full_matrix(k);
    if !h.is_symmetric(1e-12) {
        return Err(Error::NotPsd("kernel block matrix is not symmetric".into()));
    }
    let diag = h.diagonal();
    if diag.iter().any(|&d| d <= 0.0) {
        return Err(Error::NotPsd("kernel has a non-positive diagonal entry".into()));
    }
    check_psd(&h, "kernel")?;
    let ev = symmetric_eigen(&e)?.values;
    let lo_e = ev[0].max(0.0);
    let hi_e = ev[ev.len() - 1];
    let hmin = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let hmax = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo_e * hmin, hi_e * hmax))
}

#[cfg(test)]
mod tests {
    use super::super::kernel::margin_projection;
    use super::*;

    #[test]
    fn diagonal_binary_drift() {
        let m = build_drift(&DriftSpec::imodel(2, 1, 1.0, 0.0)).unwrap();
        assert_eq!(m, Mat::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]));
    }

    #[test]
    fn logit_block_uses_column_class() {
        let m = build_drift(&DriftSpec::lmodel(3, 2.0, 1.0)).unwrap();
        let expect = margin_projection(3, 2).scale(1.0 / 3.0);
        assert!(m.block(1, 2, 3).sub(&expect).max_abs() < 1e-15);
    }

    #[test]
    fn explicit_sampling() {
        let spec = DriftSpec::imodel(2, 1, 1.0, 1.0).with_sampling(vec![0.5, 0.5]);
        let m = build_drift(&spec).unwrap();
        assert!(m.as_slice().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn dimension_mismatch_detected() {
        let spec = DriftSpec::new(EffectMatrix::two_value(3, 1.0, 0.0), HKernel::LogitAligned { k: 4 });
        assert!(matches!(build_drift(&spec), Err(Error::DimensionMismatch(_))));
        let spec = DriftSpec::imodel(3, 1, 1.0, 0.0).with_sampling(vec![0.5, 0.5]);
        assert!(matches!(build_drift(&spec), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn schur_bounds_examples() {
        let (lo, hi) = schur_bounds(&EffectMatrix::two_value(3, 2.0, 0.0), &HKernel::Identity { p: 2 }).unwrap();
        assert_eq!((lo, hi), (2.0, 2.0));
        let (lo, hi) = schur_bounds(&EffectMatrix::two_value(2, 1.0, 0.5), &HKernel::Identity { p: 1 }).unwrap();
        assert!((lo - 0.5).abs() < 1e-14 && (hi - 1.5).abs() < 1e-14);
    }

    #[test]
    fn schur_bounds_reject_indefinite_effect() {
        let r = schur_bounds(&EffectMatrix::two_value(2, 1.0, 2.0), &HKernel::Identity { p: 1 });
        assert!(matches!(r, Err(Error::NotPsd(_))));
    }
}
