use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Time profile of the intra-class strength α(t) and inter-class strength β(t).
#[derive(Clone, Debug, PartialEq)]
pub enum ScheduleKind {
    Constant {
        alpha: f64,
        beta: f64,
    },
    /// α(t) = α₀/(1+t)^{r_α}, likewise β.
    PowerTail {
        alpha0: f64,
        beta0: f64,
        r_alpha: f64,
        r_beta: f64,
    },
    /// Linear interpolation between knots, clamped outside the grid.
    Tabulated {
        times: Vec<f64>,
        alpha: Vec<f64>,
        beta: Vec<f64>,
    },
}

/// Serialized as `{"kind": "...", <kind fields>, "offset": [a, b]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleRepr", into = "ScheduleRepr")]
pub struct ElasticitySchedule {
    pub kind: ScheduleKind,
    /// Constant added to (α, β) on top of `kind`.
    pub offset: Option<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
enum ScheduleRepr {
    Constant {
        alpha: f64,
        beta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offset: Option<(f64, f64)>,
    },
    PowerTail {
        alpha0: f64,
        beta0: f64,
        r_alpha: f64,
        r_beta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offset: Option<(f64, f64)>,
    },
    Tabulated {
        times: Vec<f64>,
        alpha: Vec<f64>,
        beta: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offset: Option<(f64, f64)>,
    },
}

impl TryFrom<ScheduleRepr> for ElasticitySchedule {
    type Error = Error;
    fn try_from(r: ScheduleRepr) -> Result<Self> {
        let (kind, offset) = match r {
            ScheduleRepr::Constant { alpha, beta, offset } => (ScheduleKind::Constant { alpha, beta }, offset),
            ScheduleRepr::PowerTail { alpha0, beta0, r_alpha, r_beta, offset } => {
                (ScheduleKind::PowerTail { alpha0, beta0, r_alpha, r_beta }, offset)
            }
            ScheduleRepr::Tabulated { times, alpha, beta, offset } => {
                (ScheduleKind::Tabulated { times, alpha, beta }, offset)
            }
        };
        let s = ElasticitySchedule { kind, offset };
        s.validate()?;
        Ok(s)
    }
}

impl From<ElasticitySchedule> for ScheduleRepr {
    fn from(s: ElasticitySchedule) -> Self {
        let offset = s.offset;
        match s.kind {
            ScheduleKind::Constant { alpha, beta } => ScheduleRepr::Constant { alpha, beta, offset },
            ScheduleKind::PowerTail { alpha0, beta0, r_alpha, r_beta } => {
                ScheduleRepr::PowerTail { alpha0, beta0, r_alpha, r_beta, offset }
            }
            ScheduleKind::Tabulated { times, alpha, beta } => ScheduleRepr::Tabulated { times, alpha, beta, offset },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratedStrengths {
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
}

impl IntegratedStrengths {
    pub fn new(a: f64, b: f64, k: usize) -> Self {
        let gamma = (a - b).min(a + (k as f64 - 1.0) * b);
        IntegratedStrengths { a, b, gamma }
    }
}

impl ElasticitySchedule {
    pub fn constant(alpha: f64, beta: f64) -> Self {
        ElasticitySchedule { kind: ScheduleKind::Constant { alpha, beta }, offset: None }
    }

    pub fn power_tail(alpha0: f64, beta0: f64, r_alpha: f64, r_beta: f64) -> Self {
        ElasticitySchedule { kind: ScheduleKind::PowerTail { alpha0, beta0, r_alpha, r_beta }, offset: None }
    }

    pub fn tabulated(times: Vec<f64>, alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        let s = ElasticitySchedule { kind: ScheduleKind::Tabulated { times, alpha, beta }, offset: None };
        s.validate()?;
        Ok(s)
    }

    pub fn with_offset(mut self, alpha: f64, beta: f64) -> Self {
        self.offset = Some((alpha, beta));
        self
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            ScheduleKind::Constant { alpha, beta } => {
                if !alpha.is_finite() || !beta.is_finite() {
                    return Err(Error::InvalidSchedule("constant strengths must be finite".into()));
                }
            }
            ScheduleKind::PowerTail { alpha0, beta0, r_alpha, r_beta } => {
                if !alpha0.is_finite() || !beta0.is_finite() {
                    return Err(Error::InvalidSchedule("power-tail prefactors must be finite".into()));
                }
                if !(*r_alpha >= 0.0 && *r_beta >= 0.0) || !r_alpha.is_finite() || !r_beta.is_finite() {
                    return Err(Error::InvalidSchedule("power-tail exponents must be finite and >= 0".into()));
                }
            }
            ScheduleKind::Tabulated { times, alpha, beta } => {
                if times.is_empty() {
                    return Err(Error::EmptyTable);
                }
                if alpha.len() != times.len() || beta.len() != times.len() {
                    return Err(Error::InvalidSchedule(format!(
                        "{} knots but {} alpha and {} beta values",
                        times.len(),
                        alpha.len(),
                        beta.len()
                    )));
                }
                if times.iter().chain(alpha).chain(beta).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidSchedule("tabulated values must be finite".into()));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidSchedule("knot times must be strictly increasing".into()));
                }
            }
        }
        if let Some((a, b)) = self.offset {
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::InvalidSchedule("offset must be finite".into()));
            }
        }
        Ok(())
    }

    /// (α(t), β(t)).
    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        check_time(t)?;
        let (a, b) = match &self.kind {
            ScheduleKind::Constant { alpha, beta } => (*alpha, *beta),
            ScheduleKind::PowerTail { alpha0, beta0, r_alpha, r_beta } => {
                (alpha0 * (1.0 + t).powf(-r_alpha), beta0 * (1.0 + t).powf(-r_beta))
            }
            ScheduleKind::Tabulated { times, alpha, beta } => {
                if times.is_empty() {
                    return Err(Error::EmptyTable);
                }
                (interpolate(times, alpha, t), interpolate(times, beta, t))
            }
        };
        let (oa, ob) = self.offset.unwrap_or((0.0, 0.0));
        Ok((a + oa, b + ob))
    }

    /// A(t) = ∫₀ᵗ α, B(t) = ∫₀ᵗ β and Γ(t) for `k` classes.
    pub fn integrate(&self, t: f64, k: usize) -> Result<IntegratedStrengths> {
        check_time(t)?;
        if k < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 classes, got {k}")));
        }
        let (a, b) = match &self.kind {
            ScheduleKind::Constant { alpha, beta } => (alpha * t, beta * t),
            ScheduleKind::PowerTail { alpha0, beta0, r_alpha, r_beta } => {
                (alpha0 * power_integral(*r_alpha, t), beta0 * power_integral(*r_beta, t))
            }
            ScheduleKind::Tabulated { times, alpha, beta } => {
                if times.is_empty() {
                    return Err(Error::EmptyTable);
                }
                (piecewise_integral(times, alpha, t), piecewise_integral(times, beta, t))
            }
        };
        let (oa, ob) = self.offset.unwrap_or((0.0, 0.0));
        Ok(IntegratedStrengths::new(a + oa * t, b + ob * t, k))
    }

    /// True when α(t)/β(t) does not depend on t, i.e. the drift matrices at
    /// different times commute for every kernel.
    pub fn has_constant_ratio(&self) -> bool {
        if self.offset.is_some_and(|(a, b)| a != 0.0 || b != 0.0) {
            return matches!(self.kind, ScheduleKind::Constant { .. });
        }
        match &self.kind {
            ScheduleKind::Constant { .. } => true,
            ScheduleKind::PowerTail { alpha0, beta0, r_alpha, r_beta } => {
                r_alpha == r_beta || *alpha0 == 0.0 || *beta0 == 0.0
            }
            ScheduleKind::Tabulated { alpha, beta, .. } => {
                let (a0, b0) = (alpha[0], beta[0]);
                alpha.iter().zip(beta).all(|(a, b)| (a * b0 - b * a0).abs() <= 1e-12 * (a.abs() + b.abs()).max(1.0))
            }
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() {
        return Err(Error::NonFiniteTime(t));
    }
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!("time must be >= 0, got {t}")));
    }
    Ok(())
}

/// ∫₀ᵗ (1+s)^{-r} ds.
fn power_integral(r: f64, t: f64) -> f64 {
    let l = t.ln_1p();
    let e = 1.0 - r;
    if e.abs() < 1e-12 {
        l
    } else {
        (e * l).exp_m1() / e
    }
}

fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    let n = times.len();
    if t <= times[0] {
        return values[0];
    }
    if t >= times[n - 1] {
        return values[n - 1];
    }
    let i = times.partition_point(|&x| x <= t) - 1;
    let w = (t - times[i]) / (times[i + 1] - times[i]);
    values[i] + w * (values[i + 1] - values[i])
}

/// Exact integral of the clamped piecewise-linear interpolant over [0, t].
fn piecewise_integral(times: &[f64], values: &[f64], t: f64) -> f64 {
    let segment = |lo: f64, hi: f64| -> f64 {
        if hi <= lo {
            0.0
        } else {
            0.5 * (hi - lo) * (interpolate(times, values, lo) + interpolate(times, values, hi))
        }
    };
    let mut cuts = vec![0.0];
    cuts.extend(times.iter().copied().filter(|&x| x > 0.0 && x < t));
    cuts.push(t);
    cuts.windows(2).map(|w| segment(w[0], w[1])).sum()
}
