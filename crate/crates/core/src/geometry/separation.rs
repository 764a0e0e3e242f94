use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::simplex::{phase_one, Feasibility, PIVOT_CAP};
use crate::dynamics::{trial_rng, MeanTrajectory};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, Mat};

/// Hyperplane {x : ⟨direction, x⟩ = offset}; the first class lies on the
/// positive side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub direction: Vec<f64>,
    pub offset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationVerdict {
    pub separable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    /// Gap between the projected classes along the unit direction; negative
    /// when they overlap.
    pub margin: f64,
}

fn check_shapes(a: &Mat, b: &Mat) -> Result<()> {
    if a.cols() != b.cols() {
        return Err(Error::DimensionMismatch(format!("classes have {} and {} features", a.cols(), b.cols())));
    }
    if a.rows() == 0 || b.rows() == 0 {
        return Err(Error::InvalidArgument("each class needs at least one sample".into()));
    }
    Ok(())
}

fn extent(m: &Mat, nu: &[f64]) -> (f64, f64) {
    (0..m.rows()).map(|i| dot(m.row(i), nu)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Separation along a fixed direction, in either orientation.
pub fn check_direction(a: &Mat, b: &Mat, nu: &[f64]) -> Result<SeparationVerdict> {
    check_shapes(a, b)?;
    if nu.len() != a.cols() {
        return Err(Error::DimensionMismatch(format!("direction has {} entries for p = {}", nu.len(), a.cols())));
    }
    let n = norm2(nu);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::ZeroDirection);
    }
    let unit: Vec<f64> = nu.iter().map(|v| v / n).collect();
    let (a_lo, a_hi) = extent(a, &unit);
    let (b_lo, b_hi) = extent(b, &unit);
    let forward = a_lo - b_hi;
    let backward = b_lo - a_hi;
    let margin = forward.max(backward);
    if margin <= 0.0 {
        return Ok(SeparationVerdict { separable: false, witness: None, margin });
    }
    let (direction, offset) = if forward >= backward {
        (unit, 0.5 * (a_lo + b_hi))
    } else {
        (unit.iter().map(|v| -v).collect(), -0.5 * (b_lo + a_hi))
    };
    Ok(SeparationVerdict { separable: true, witness: Some(Witness { direction, offset }), margin })
}

/// Exact strict linear separability. Tries the centroid difference first,
/// then decides whether the convex hulls meet with a phase-one simplex; an
/// infeasible hull intersection yields a separating direction from the
/// Farkas certificate.
pub fn is_linearly_separable(a: &Mat, b: &Mat) -> Result<SeparationVerdict> {
    check_shapes(a, b)?;
    let p = a.cols();
    let centroid = |m: &Mat| -> Vec<f64> { (0..p).map(|j| (0..m.rows()).map(|i| m[(i, j)]).sum::<f64>() / m.rows() as f64).collect() };
    let (ca, cb) = (centroid(a), centroid(b));
    let diff: Vec<f64> = ca.iter().zip(&cb).map(|(x, y)| x - y).collect();
    if norm2(&diff) > 0.0 {
        let v = check_direction(a, b, &diff)?;
        if v.separable {
            return Ok(v);
        }
    }
    // Centre and scale for a well-conditioned tableau.
    let mid: Vec<f64> = ca.iter().zip(&cb).map(|(x, y)| 0.5 * (x + y)).collect();
    let scale = a.as_slice().iter().chain(b.as_slice()).enumerate().fold(0.0f64, |s, (i, v)| s.max((v - mid[i % p]).abs()));
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let (na, nb) = (a.rows(), b.rows());
    let mut rows = vec![vec![0.0; na + nb]; p + 2];
    for j in 0..p {
        for i in 0..na {
            rows[j][i] = (a[(i, j)] - mid[j]) / scale;
        }
        for i in 0..nb {
            rows[j][na + i] = -(b[(i, j)] - mid[j]) / scale;
        }
    }
    for i in 0..na {
        rows[p][i] = 1.0;
    }
    for i in 0..nb {
        rows[p + 1][na + i] = 1.0;
    }
    let mut rhs = vec![0.0; p + 2];
    rhs[p] = 1.0;
    rhs[p + 1] = 1.0;
    let not_separable = |margin: f64| SeparationVerdict { separable: false, witness: None, margin };
    match phase_one(&rows, &rhs, PIVOT_CAP)? {
        Feasibility::Feasible => {
            let margin = if norm2(&diff) > 0.0 { check_direction(a, b, &diff)?.margin } else { 0.0 };
            Ok(not_separable(margin.min(0.0)))
        }
        Feasibility::Infeasible { dual, .. } => {
            let w: Vec<f64> = dual[..p].iter().map(|v| -v).collect();
            if norm2(&w) == 0.0 {
                return Ok(not_separable(0.0));
            }
            let v = check_direction(a, b, &w)?;
            if v.separable {
                Ok(v)
            } else {
                Ok(not_separable(v.margin))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum DirectionMode {
    /// Normalised mean difference at time `t` (default: last grid point).
    EndpointDiff {
        #[serde(default)]
        t: Option<f64>,
    },
    /// Maximise min over class pairs of Σ_{t∈[t1,t2]} |⟨X̄^k(t) − X̄^l(t), ν⟩|.
    OptimizedMinPair { t1: f64, t2: f64 },
}

const SUBGRADIENT_ITERS: usize = 500;
const RESTARTS: usize = 8;

/// Value of the pairwise objective for a direction.
pub fn min_pair_objective(traj: &MeanTrajectory, t1: f64, t2: f64, nu: &[f64]) -> f64 {
    let diffs = pair_differences(traj, t1, t2);
    diffs.iter().map(|d| d.iter().map(|v| dot(v, nu).abs()).sum::<f64>()).fold(f64::INFINITY, f64::min)
}

fn pair_differences(traj: &MeanTrajectory, t1: f64, t2: f64) -> Vec<Vec<Vec<f64>>> {
    let idx: Vec<usize> = (0..traj.len()).filter(|&i| traj.grid[i] >= t1 && traj.grid[i] <= t2).collect();
    let mut out = Vec::new();
    for k in 0..traj.k {
        for l in k + 1..traj.k {
            out.push(
                idx.iter()
                    .map(|&i| traj.class_mean(i, k).iter().zip(traj.class_mean(i, l)).map(|(a, b)| a - b).collect())
                    .collect(),
            );
        }
    }
    out
}

/// Separation direction for classes (k, l).
pub fn select_direction(traj: &MeanTrajectory, k: usize, l: usize, mode: DirectionMode) -> Result<Vec<f64>> {
    traj.validate()?;
    if k >= traj.k || l >= traj.k || k == l {
        return Err(Error::InvalidArgument(format!("invalid class pair ({k}, {l}) for K = {}", traj.k)));
    }
    if traj.is_empty() {
        return Err(Error::GridMismatch("trajectory is empty".into()));
    }
    let (first, last) = (traj.grid[0], traj.grid[traj.len() - 1]);
    let inside = |t: f64| t >= first - 1e-12 && t <= last + 1e-12;
    let endpoint = |t: f64| -> Option<Vec<f64>> {
        let i = traj.nearest_index(t);
        let d: Vec<f64> = traj.class_mean(i, k).iter().zip(traj.class_mean(i, l)).map(|(a, b)| a - b).collect();
        let n = norm2(&d);
        (n >= 1e-12).then(|| d.iter().map(|v| v / n).collect())
    };
    match mode {
        DirectionMode::EndpointDiff { t } => {
            let t = t.unwrap_or(last);
            if !inside(t) {
                return Err(Error::InvalidArgument(format!("t = {t} outside the grid [{first}, {last}]")));
            }
            endpoint(t).ok_or(Error::DegenerateMeans)
        }
        DirectionMode::OptimizedMinPair { t1, t2 } => {
            if !(t1 <= t2) || !inside(t1) || !inside(t2) {
                return Err(Error::InvalidArgument(format!("window [{t1}, {t2}] outside the grid [{first}, {last}]")));
            }
            let diffs = pair_differences(traj, t1, t2);
            if diffs.iter().flatten().all(|d| norm2(d) < 1e-12) {
                return Err(Error::DegenerateMeans);
            }
            let objective =
                |nu: &[f64]| diffs.iter().map(|d| d.iter().map(|v| dot(v, nu).abs()).sum::<f64>()).fold(f64::INFINITY, f64::min);
            let p = traj.p;
            let mut starts = Vec::with_capacity(RESTARTS + 1);
            if let Some(e) = endpoint(t2) {
                starts.push(e);
            }
            let mut rng = trial_rng(0x5e1ec7, 0);
            for _ in 0..RESTARTS {
                let v: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
                let n = norm2(&v).max(1e-300);
                starts.push(v.iter().map(|x| x / n).collect());
            }
            let mut best = starts[0].clone();
            let mut best_val = objective(&best);
            for start in starts {
                let mut nu = start;
                for iter in 1..=SUBGRADIENT_ITERS {
                    let val = objective(&nu);
                    if val > best_val {
                        best_val = val;
                        best = nu.clone();
                    }
                    let worst = diffs
                        .iter()
                        .min_by(|a, b| {
                            let fa: f64 = a.iter().map(|v| dot(v, &nu).abs()).sum();
                            let fb: f64 = b.iter().map(|v| dot(v, &nu).abs()).sum();
                            fa.total_cmp(&fb)
                        })
                        .expect("at least one class pair");
                    let mut g = vec![0.0; p];
                    for d in worst {
                        let s = dot(d, &nu).signum();
                        for (gi, di) in g.iter_mut().zip(d) {
                            *gi += s * di;
                        }
                    }
                    let gn = norm2(&g);
                    if gn == 0.0 {
                        break;
                    }
                    let step = 1.0 / (iter as f64).sqrt();
                    for (x, gi) in nu.iter_mut().zip(&g) {
                        *x += step * gi / gn;
                    }
                    let n = norm2(&nu);
                    if n > 1.0 {
                        nu.iter_mut().for_each(|x| *x /= n);
                    }
                }
                let val = objective(&nu);
                if val > best_val {
                    best_val = val;
                    best = nu;
                }
            }
            let n = norm2(&best);
            if n == 0.0 {
                return Err(Error::DegenerateMeans);
            }
            Ok(best.iter().map(|v| v / n).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> Mat {
        Mat::from_fn(v.len(), 1, |i, _| v[i])
    }

    #[test]
    fn one_dimensional_examples() {
        let v = check_direction(&col(&[2.0, 3.0]), &col(&[0.0, 1.0]), &[1.0]).unwrap();
        assert!(v.separable && (v.margin - 1.0).abs() < 1e-15);
        for nu in [1.0, -1.0] {
            assert!(!check_direction(&col(&[0.0, 2.0]), &col(&[1.0, 3.0]), &[nu]).unwrap().separable);
        }
        assert!(!is_linearly_separable(&col(&[0.0, 2.0]), &col(&[1.0, 3.0])).unwrap().separable);
        assert_eq!(check_direction(&col(&[1.0]), &col(&[0.0]), &[0.0]), Err(Error::ZeroDirection));
    }

    #[test]
    fn identical_sets_never_separate() {
        let a = Mat::from_rows(&[vec![0.0, 1.0], vec![2.0, -1.0]]);
        assert!(!is_linearly_separable(&a, &a).unwrap().separable);
        assert!(!check_direction(&a, &a, &[0.3, 0.7]).unwrap().separable);
    }

    #[test]
    fn single_points_use_their_difference() {
        let a = Mat::from_rows(&[vec![1.0, 2.0, 0.0]]);
        let b = Mat::from_rows(&[vec![-1.0, 0.0, 1.0]]);
        let v = is_linearly_separable(&a, &b).unwrap();
        assert!(v.separable);
        let w = v.witness.unwrap().direction;
        let d = [2.0, 2.0, -1.0].map(|x: f64| x / 3.0);
        assert!(w.iter().zip(d).all(|(x, y)| (x - y).abs() < 1e-12));
    }

    #[test]
    fn lp_finds_direction_the_centroids_miss() {
        // Centroid difference is along x, but only y separates.
        let a = Mat::from_rows(&[vec![100.0, 1.0], vec![-1.0, 1.0]]);
        let b = Mat::from_rows(&[vec![0.0, 0.0], vec![60.0, 0.0]]);
        assert!(!check_direction(&a, &b, &[19.5, 1.0]).unwrap().separable);
        let v = is_linearly_separable(&a, &b).unwrap();
        assert!(v.separable);
        let w = v.witness.unwrap();
        assert!(check_direction(&a, &b, &w.direction).unwrap().separable);
    }

    #[test]
    fn xor_is_not_separable() {
        let a = Mat::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0]]);
        let b = Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(!is_linearly_separable(&a, &b).unwrap().separable);
    }
}
