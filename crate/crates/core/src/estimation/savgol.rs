use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Window length (odd) and polynomial order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Smoothing {
    pub window: usize,
    #[serde(default = "default_order")]
    pub order: usize,
}

fn default_order() -> usize {
    3
}

impl Smoothing {
    pub fn new(window: usize, order: usize) -> Self {
        Smoothing { window, order }
    }

    pub fn validate(&self, len: usize) -> Result<()> {
        if self.window % 2 == 0 {
            return Err(Error::BadWindow(format!("window {} is even", self.window)));
        }
        if self.window < self.order + 2 {
            return Err(Error::BadWindow(format!("window {} must be at least order + 2 = {}", self.window, self.order + 2)));
        }
        if self.window > len {
            return Err(Error::BadWindow(format!("window {} exceeds series length {len}", self.window)));
        }
        Ok(())
    }
}

/// Least-squares weights that map a window of samples to the fitted value
/// (deriv = 0) or slope per sample (deriv = 1) at offset `at` in the window.
pub fn savgol_weights(window: usize, order: usize, at: usize, deriv: usize) -> Result<Vec<f64>> {
    if window == 0 || order >= window || at >= window || deriv > 1 {
        return Err(Error::BadWindow(format!("window {window}, order {order}, position {at}, derivative {deriv}")));
    }
    let m = order + 1;
    let half = ((window - 1) / 2).max(1) as f64;
    // Columns u^j with u = (i − at)/half, orthonormalised twice.
    let mut q: Vec<Vec<f64>> = (0..m)
        .map(|j| (0..window).map(|i| ((i as f64 - at as f64) / half).powi(j as i32)).collect())
        .collect();
    let mut r = vec![vec![0.0; m]; m];
    for j in 0..m {
        for _ in 0..2 {
            for i in 0..j {
                let proj: f64 = q[i].iter().zip(&q[j]).map(|(a, b)| a * b).sum();
                r[i][j] += proj;
                let qi = q[i].clone();
                for (x, y) in q[j].iter_mut().zip(&qi) {
                    *x -= proj * y;
                }
            }
        }
        let nrm = q[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        if nrm == 0.0 {
            return Err(Error::BadWindow("polynomial design matrix is rank deficient".into()));
        }
        r[j][j] = nrm;
        q[j].iter_mut().for_each(|v| *v /= nrm);
    }
    // coefficient c = e_derivᵀ R⁻¹ Qᵀ y: solve Rᵀ z = e_deriv.
    let mut z = vec![0.0; m];
    for i in 0..m {
        let mut s = if i == deriv { 1.0 } else { 0.0 };
        for k in 0..i {
            s -= r[k][i] * z[k];
        }
        z[i] = s / r[i][i];
    }
    let scale = if deriv == 1 { 1.0 / half } else { 1.0 };
    Ok((0..window).map(|i| scale * (0..m).map(|j| q[j][i] * z[j]).sum::<f64>()).collect())
}

/// Savitzky–Golay smoothing (deriv = 0) or differentiation (deriv = 1, divided
/// by `dt`). Points closer than half a window to an end use a window of the
/// same length fit off-centre.
pub fn savgol(series: &[f64], window: usize, order: usize, deriv: usize, dt: f64) -> Result<Vec<f64>> {
    if window % 2 == 0 {
        return Err(Error::BadWindow(format!("window {window} is even")));
    }
    if order >= window {
        return Err(Error::BadWindow(format!("order {order} must be below window {window}")));
    }
    if series.len() < window {
        return Err(Error::BadWindow(format!("series of length {} is shorter than window {window}", series.len())));
    }
    if deriv > 1 {
        return Err(Error::BadWindow(format!("derivative order {deriv} unsupported")));
    }
    if deriv == 1 && !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::BadWindow(format!("spacing must be positive, got {dt}")));
    }
    let n = series.len();
    let half = window / 2;
    let factor = if deriv == 1 { 1.0 / dt } else { 1.0 };
    let mut cache: Vec<Option<Vec<f64>>> = vec![None; window];
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let start = i.saturating_sub(half).min(n - window);
        let at = i - start;
        if cache[at].is_none() {
            cache[at] = Some(savgol_weights(window, order, at, deriv)?);
        }
        let w = cache[at].as_ref().expect("weights cached above");
        let v: f64 = w.iter().zip(&series[start..start + window]).map(|(a, b)| a * b).sum();
        out.push(v * factor);
    }
    Ok(out)
}
