//! Phase-one dense simplex with Bland's rule, used to decide whether two
//! convex hulls intersect.

use crate::error::{Error, Result};

pub const PIVOT_CAP: usize = 1_000_000;
const EPS: f64 = 1e-11;

pub(crate) enum Feasibility {
    Feasible,
    /// Farkas certificate y with yᵀA ≤ 0 and yᵀb > 0.
    Infeasible { dual: Vec<f64> },
}

/// Decides feasibility of {x ≥ 0 : A x = b} for b ≥ 0. `a` is row-major m×n.
pub(crate) fn phase_one(a: &[Vec<f64>], b: &[f64], cap: usize) -> Result<Feasibility> {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    let width = n + m + 1;
    let rhs = width - 1;
    let mut t: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut row = vec![0.0; width];
            row[..n].copy_from_slice(&a[i]);
            row[n + i] = 1.0;
            row[rhs] = b[i];
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..n + m).collect();
    // Reduced costs for min Σ artificials; last entry holds −objective.
    let mut cost = vec![0.0; width];
    for j in n..n + m {
        cost[j] = 1.0;
    }
    for row in &t {
        for j in 0..width {
            cost[j] -= row[j];
        }
    }
    let mut pivots = 0;
    loop {
        let Some(enter) = (0..n + m).find(|&j| cost[j] < -EPS) else { break };
        let mut leave: Option<usize> = None;
        for i in 0..m {
            if t[i][enter] > EPS {
                let ratio = t[i][rhs] / t[i][enter];
                match leave {
                    None => leave = Some(i),
                    Some(l) => {
                        let best = t[l][rhs] / t[l][enter];
                        if ratio < best - EPS || ((ratio - best).abs() <= EPS && basis[i] < basis[l]) {
                            leave = Some(i);
                        }
                    }
                }
            }
        }
        let Some(r) = leave else {
            // Unbounded descent cannot happen for a phase-one objective bounded below by 0.
            return Err(Error::NoConvergence { iterations: pivots });
        };
        pivots += 1;
        if pivots > cap {
            return Err(Error::BudgetExceeded(cap));
        }
        let piv = t[r][enter];
        t[r].iter_mut().for_each(|v| *v /= piv);
        let pivot_row = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r {
                let f = row[enter];
                if f != 0.0 {
                    for (v, p) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * p;
                    }
                }
            }
        }
        let f = cost[enter];
        for (v, p) in cost.iter_mut().zip(&pivot_row) {
            *v -= f * p;
        }
        basis[r] = enter;
    }
    let value = -cost[rhs];
    let scale = b.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    if value <= 1e-9 * scale {
        return Ok(Feasibility::Feasible);
    }
    let dual = (0..m).map(|i| 1.0 - cost[n + i]).collect();
    Ok(Feasibility::Infeasible { dual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_feasible_and_infeasible() {
        // x1 + x2 = 1
        let a = vec![vec![1.0, 1.0]];
        assert!(matches!(phase_one(&a, &[1.0], 100).unwrap(), Feasibility::Feasible));
        // x1 = 1, x1 = 2 cannot both hold
        let a = vec![vec![1.0], vec![1.0]];
        match phase_one(&a, &[1.0, 2.0], 100).unwrap() {
            Feasibility::Infeasible { dual } => {
                assert!(dual[0] + dual[1] <= 1e-12);
                assert!(dual[0] + 2.0 * dual[1] > 0.0);
            }
            Feasibility::Feasible => panic!("should be infeasible"),
        }
    }

    #[test]
    fn budget_is_enforced() {
        let a = vec![vec![1.0, 1.0, 1.0], vec![1.0, -1.0, 0.0]];
        assert!(matches!(phase_one(&a, &[1.0, 0.5], 0), Err(Error::BudgetExceeded(0))));
    }
}
