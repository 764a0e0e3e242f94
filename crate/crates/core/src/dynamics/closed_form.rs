use serde::{Deserialize, Serialize};

use crate::elasticity::{margin_direction, stacked_margins, ElasticitySchedule, IntegratedStrengths};
use crate::error::{Error, Result};
use crate::linalg::{lstsq, norm2, Mat};

const DENOM_TOL: f64 = 1e-12;

/// Two-class, one-feature class means for constant (α, β).
pub fn binary_closed_form(c1: f64, c2: f64, alpha: f64, beta: f64, t: f64) -> (f64, f64) {
    binary_closed_form_at(c1, c2, IntegratedStrengths::new(alpha * t, beta * t, 2))
}

/// Binary solution in terms of the integrated strengths A(t), B(t).
pub fn binary_closed_form_at(c1: f64, c2: f64, s: IntegratedStrengths) -> (f64, f64) {
    let diff = 0.5 * (c1 - c2) * ((s.a - s.b) / 2.0).exp();
    let common = 0.5 * (c1 + c2) * ((s.a + s.b) / 2.0).exp();
    (diff + common, -diff + common)
}

/// Splits stacked initial means into the shared centre c₀ and per-class
/// offsets c_k (which sum to zero).
pub fn imodel_decompose(init: &[f64], k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if k < 2 || init.len() % k != 0 {
        return Err(Error::DimensionMismatch(format!("{} values do not split into K = {k} classes", init.len())));
    }
    let p = init.len() / k;
    let c0: Vec<f64> = (0..p).map(|j| (0..k).map(|c| init[c * p + j]).sum::<f64>() / k as f64).collect();
    let c: Vec<f64> = init.iter().enumerate().map(|(i, v)| v - c0[i % p]).collect();
    Ok((c0, c))
}

/// X̄(t) = c·e^{(A−B)/K} + (1⊗c₀)·e^{(A+(K−1)B)/K}.
pub fn imodel_closed_form(c0: &[f64], c: &[f64], sched: &ElasticitySchedule, k: usize, t: f64) -> Result<Vec<f64>> {
    let p = c0.len();
    if p == 0 || c.len() != k * p {
        return Err(Error::DimensionMismatch(format!("offsets have {} entries, need K·p = {}", c.len(), k * p)));
    }
    let scale = c.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let worst = (0..p).map(|j| (0..k).map(|cl| c[cl * p + j]).sum::<f64>().abs()).fold(0.0, f64::max);
    if worst > 1e-10 * scale {
        return Err(Error::CentroidViolation(worst));
    }
    let s = sched.integrate(t, k)?;
    let kf = k as f64;
    let e_diff = ((s.a - s.b) / kf).exp();
    let e_common = ((s.a + (kf - 1.0) * s.b) / kf).exp();
    Ok(c.iter().enumerate().map(|(i, ci)| ci * e_diff + c0[i % p] * e_common).collect())
}

/// Eigenbasis of the undivided logit-aligned matrix for two-value E.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LModelBasis {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Eigenvector (d_0, …, d_{K−1}) for α − β.
    pub d: Vec<f64>,
    /// K − 1 eigenvectors for α + β/(K−1).
    pub f: Vec<Vec<f64>>,
    /// K(K−1) vectors spanning the null space.
    pub null: Vec<Vec<f64>>,
    /// Three-class parameter set (ξ₁, …, ξ₆), when K = 3.
    pub xi: Option<[f64; 6]>,
}

/// Three-class parameters ξ₁..ξ₆ of the f-eigenvectors.
pub fn lmodel_xi(alpha: f64, beta: f64) -> Result<[f64; 6]> {
    let d1 = 3.0 * beta;
    let d2 = 6.0 * alpha * beta + 3.0 * beta * beta;
    if d1.abs() < DENOM_TOL || d2.abs() < DENOM_TOL {
        return Err(Error::SingularParameters(format!("alpha = {alpha}, beta = {beta} zero a denominator")));
    }
    let (a, b) = (alpha, beta);
    Ok([
        (2.0 * a + b) / d1,
        (a + 2.0 * b) / d1,
        (a - b) / d1,
        (a * a + a * b + 7.0 * b * b) / d2,
        (a * a + 4.0 * a * b - 5.0 * b * b) / d2,
        (a * a - 2.0 * a * b - 8.0 * b * b) / d2,
    ])
}

/// Builds {d, f_l, null} for K classes. The f-eigenvector for the contrast
/// s = e_l − e_{K−1} has block k equal to (α−β)s_k d_k + β s, scaled so that
/// ⟨d_k, f_k⟩ = s_k.
pub fn lmodel_basis(k: usize, alpha: f64, beta: f64) -> Result<LModelBasis> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 classes, got {k}")));
    }
    let xi = if k == 3 { Some(lmodel_xi(alpha, beta)?) } else { None };
    let kf = k as f64;
    let denom = (kf - 1.0) * alpha + beta;
    if denom.abs() < DENOM_TOL {
        return Err(Error::SingularParameters(format!(
            "(K-1)·alpha + beta vanishes for alpha = {alpha}, beta = {beta}"
        )));
    }
    let scale = kf / denom;
    let margins: Vec<Vec<f64>> = (0..k).map(|j| margin_direction(k, j)).collect();
    let f = (0..k - 1)
        .map(|l| {
            let mut s = vec![0.0; k];
            s[l] = 1.0;
            s[k - 1] = -1.0;
            (0..k)
                .flat_map(|blk| {
                    let s = s.clone();
                    let m = margins[blk].clone();
                    (0..k).map(move |i| scale * ((alpha - beta) * s[blk] * m[i] + beta * s[i]))
                })
                .collect()
        })
        .collect();
    let mut null = Vec::with_capacity(k * (k - 1));
    for blk in 0..k {
        let mut ones = vec![0.0; k * k];
        ones[blk * k..(blk + 1) * k].iter_mut().for_each(|v| *v = 1.0);
        null.push(ones);
        let others: Vec<usize> = (0..k).filter(|&i| i != blk).collect();
        for w in others.windows(2) {
            let mut v = vec![0.0; k * k];
            v[blk * k + w[0]] = 1.0;
            v[blk * k + w[1]] = -1.0;
            null.push(v);
        }
    }
    Ok(LModelBasis { k, alpha, beta, d: stacked_margins(k), f, null, xi })
}

/// Coordinates of an initial value in the logit-aligned eigenbasis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LModelCoefficients {
    /// Null-space component (constant in time).
    pub c0: Vec<f64>,
    pub c1: f64,
    pub c2: Vec<f64>,
    pub basis: LModelBasis,
}

impl LModelCoefficients {
    /// X̄(0) represented by the coefficients.
    pub fn initial_value(&self) -> Vec<f64> {
        self.evaluate(1.0, 1.0)
    }

    fn evaluate(&self, e_d: f64, e_f: f64) -> Vec<f64> {
        let mut x = self.c0.clone();
        for (xi, di) in x.iter_mut().zip(&self.basis.d) {
            *xi += self.c1 * e_d * di;
        }
        for (c, f) in self.c2.iter().zip(&self.basis.f) {
            for (xi, fi) in x.iter_mut().zip(f) {
                *xi += c * e_f * fi;
            }
        }
        x
    }
}

/// Least-squares decomposition of `init` onto [d | f | null] at (α₀, β₀).
pub fn fit_lmodel_coefficients(init: &[f64], k: usize, alpha0: f64, beta0: f64) -> Result<LModelCoefficients> {
    let basis = lmodel_basis(k, alpha0, beta0)?;
    let n = k * k;
    if init.len() != n {
        return Err(Error::DimensionMismatch(format!("{} initial values for K² = {n}", init.len())));
    }
    let columns: Vec<&Vec<f64>> = std::iter::once(&basis.d).chain(&basis.f).chain(&basis.null).collect();
    let a = Mat::from_fn(n, n, |i, j| columns[j][i]);
    let ls = lstsq(&a, init, 1e-12)?;
    if ls.rank < n {
        return Err(Error::RankDeficient { rank: ls.rank, needed: n });
    }
    let w = &ls.solution;
    let c1 = w[0];
    let c2 = w[1..k].to_vec();
    let mut c0 = vec![0.0; n];
    for (wj, v) in w[k..].iter().zip(&basis.null) {
        for (c, vi) in c0.iter_mut().zip(v) {
            *c += wj * vi;
        }
    }
    let coeffs = LModelCoefficients { c0, c1, c2, basis };
    let back = coeffs.initial_value();
    let err = norm2(&back.iter().zip(init).map(|(a, b)| a - b).collect::<Vec<_>>());
    if err > 1e-8 * norm2(init).max(f64::MIN_POSITIVE) {
        return Err(Error::RankDeficient { rank: ls.rank, needed: n });
    }
    Ok(coeffs)
}

/// X̄(t) = c₀ + C₁·d·e^{(A−B)/K} + Σ_l C₂ₗ·f_l·e^{(A+B/(K−1))/K}.
pub fn lmodel_closed_form(coeffs: &LModelCoefficients, sched: &ElasticitySchedule, t: f64) -> Result<Vec<f64>> {
    let k = coeffs.basis.k;
    let kf = k as f64;
    let s = sched.integrate(t, k)?;
    let e_d = ((s.a - s.b) / kf).exp();
    let e_f = ((s.a + s.b / (kf - 1.0)) / kf).exp();
    Ok(coeffs.evaluate(e_d, e_f))
}
