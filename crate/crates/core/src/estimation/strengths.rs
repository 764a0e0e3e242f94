use serde::{Deserialize, Serialize};

use super::ab::ABSeries;
use super::savgol::{savgol, Smoothing};
use crate::error::{Error, Result};

/// Instantaneous strengths α̂(t), β̂(t) from differentiated Â, B̂.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrengthSeries {
    pub grid: Vec<f64>,
    pub alpha_hat: Vec<f64>,
    pub beta_hat: Vec<f64>,
    pub smoothing: Smoothing,
}

/// Grid spacing, provided the grid is uniform.
pub fn uniform_spacing(grid: &[f64]) -> Result<f64> {
    if grid.len() < 2 {
        return Err(Error::GridMismatch("need at least two grid points".into()));
    }
    let dt = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    let tol = 1e-6 * dt;
    if grid.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > tol) {
        return Err(Error::GridMismatch("differentiation needs a uniform grid".into()));
    }
    Ok(dt)
}

pub fn differentiate_strengths(ab: &ABSeries, smoothing: Smoothing) -> Result<StrengthSeries> {
    smoothing.validate(ab.grid.len())?;
    let dt = uniform_spacing(&ab.grid)?;
    Ok(StrengthSeries {
        grid: ab.grid.clone(),
        alpha_hat: savgol(&ab.a_hat, smoothing.window, smoothing.order, 1, dt)?,
        beta_hat: savgol(&ab.b_hat, smoothing.window, smoothing.order, 1, dt)?,
        smoothing,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailVariant {
    /// From the instantaneous strength: r̂ = −⟨log|α(t)| / log(1+t)⟩.
    FromStrength,
    /// From the integrated strength: r̂ = 1 − ⟨log|A(t)| / log(1+t)⟩.
    FromIntegrated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailIndexReport {
    pub r_alpha: f64,
    pub r_beta: f64,
    pub r_gamma: f64,
    pub t1: f64,
    pub t2: f64,
    pub variant: TailVariant,
}

/// Decay exponent of `series` averaged over grid points in [t1, t2].
pub fn tail_index(series: &[f64], grid: &[f64], t1: f64, t2: f64, variant: TailVariant) -> Result<f64> {
    if series.len() != grid.len() {
        return Err(Error::GridMismatch(format!("{} values on a grid of {}", series.len(), grid.len())));
    }
    if !(t1.is_finite() && t2.is_finite() && t2 > t1 && t1 > 0.0) {
        return Err(Error::InvalidArgument(format!("tail window needs 0 < t1 < t2, got [{t1}, {t2}]")));
    }
    let terms: Vec<f64> = grid
        .iter()
        .zip(series)
        .filter(|(t, _)| **t >= t1 && **t <= t2)
        .map(|(t, v)| v.abs().max(1e-300).ln() / t.ln_1p())
        .collect();
    if terms.is_empty() {
        return Err(Error::EmptyWindow { t1, t2 });
    }
    let avg = terms.iter().sum::<f64>() / terms.len() as f64;
    Ok(match variant {
        TailVariant::FromStrength => -avg,
        TailVariant::FromIntegrated => 1.0 - avg,
    })
}

/// Tail indices of both strengths; r_γ = min(r_α, r_β).
pub fn tail_report(
    alpha_series: &[f64],
    beta_series: &[f64],
    grid: &[f64],
    t1: f64,
    t2: f64,
    variant: TailVariant,
) -> Result<TailIndexReport> {
    let r_alpha = tail_index(alpha_series, grid, t1, t2, variant)?;
    let r_beta = tail_index(beta_series, grid, t1, t2, variant)?;
    Ok(TailIndexReport { r_alpha, r_beta, r_gamma: r_alpha.min(r_beta), t1, t2, variant })
}
