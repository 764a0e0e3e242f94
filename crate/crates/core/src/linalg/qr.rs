use super::Mat;
use crate::error::{Error, Result};

/// LU factorisation with partial pivoting. Pivots smaller than `guard` are
/// replaced by `guard` so that nearly singular shifts stay usable for
/// inverse iteration.
pub(crate) struct Lu {
    lu: Mat,
    perm: Vec<usize>,
    singular: bool,
}

impl Lu {
    pub(crate) fn factor(a: &Mat, guard: f64) -> Lu {
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut singular = false;
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| lu[(i, k)].abs().total_cmp(&lu[(j, k)].abs())).unwrap_or(k);
            if p != k {
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
                perm.swap(k, p);
            }
            if lu[(k, k)].abs() <= guard {
                singular = true;
                lu[(k, k)] = if lu[(k, k)] < 0.0 { -guard } else { guard };
                if guard == 0.0 {
                    continue;
                }
            }
            let piv = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / piv;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[(i, j)] -= f * lu[(k, j)];
                    }
                }
            }
        }
        Lu { lu, perm, singular }
    }

    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows();
        let mut x: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[(i, j)] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[(i, j)] * x[j];
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }
}

/// Solve a square system `a x = b`.
pub fn solve_lu(a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    if !a.is_square() || a.rows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "cannot solve {}x{} system with rhs of length {}",
            a.rows(),
            a.cols(),
            b.len()
        )));
    }
    let lu = Lu::factor(a, 0.0);
    if lu.singular {
        return Err(Error::SingularParameters("matrix is singular".into()));
    }
    Ok(lu.solve(b))
}

#[derive(Clone, Debug)]
pub struct LeastSquares {
    pub solution: Vec<f64>,
    pub rank: usize,
    pub residual_norm: f64,
}

/// Least squares by Householder QR with column pivoting. Columns whose
/// pivot falls below `rcond · |R₀₀|` are dropped from the solve.
pub fn lstsq(a: &Mat, b: &[f64], rcond: f64) -> Result<LeastSquares> {
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m {
        return Err(Error::DimensionMismatch(format!("rhs length {} for {m} rows", b.len())));
    }
    let mut r = a.clone();
    let mut y = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut colnorm: Vec<f64> = (0..n).map(|j| (0..m).map(|i| r[(i, j)].powi(2)).sum()).collect();
    let steps = m.min(n);
    let mut diag = vec![0.0; steps];
    for k in 0..steps {
        let p = (k..n).max_by(|&i, &j| colnorm[i].total_cmp(&colnorm[j])).unwrap_or(k);
        if p != k {
            for i in 0..m {
                let t = r[(i, k)];
                r[(i, k)] = r[(i, p)];
                r[(i, p)] = t;
            }
            colnorm.swap(k, p);
            perm.swap(k, p);
        }
        let alpha: f64 = (k..m).map(|i| r[(i, k)].powi(2)).sum::<f64>().sqrt();
        if alpha == 0.0 {
            diag[k] = 0.0;
            continue;
        }
        let alpha = if r[(k, k)] > 0.0 { -alpha } else { alpha };
        let mut v: Vec<f64> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for j in k..n {
                let s: f64 = v.iter().enumerate().map(|(t, vt)| vt * r[(k + t, j)]).sum::<f64>() * 2.0 / vnorm2;
                for (t, vt) in v.iter().enumerate() {
                    r[(k + t, j)] -= s * vt;
                }
            }
            let s: f64 = v.iter().enumerate().map(|(t, vt)| vt * y[k + t]).sum::<f64>() * 2.0 / vnorm2;
            for (t, vt) in v.iter().enumerate() {
                y[k + t] -= s * vt;
            }
        }
        diag[k] = r[(k, k)];
        for (j, cn) in colnorm.iter_mut().enumerate().skip(k + 1) {
            *cn = (k + 1..m).map(|i| r[(i, j)].powi(2)).sum();
        }
    }
    let lead = diag.first().map_or(0.0, |d| d.abs());
    let rank = diag.iter().take_while(|d| d.abs() > rcond * lead && lead > 0.0).count();
    let mut z = vec![0.0; n];
    for i in (0..rank).rev() {
        let mut s = y[i];
        for j in i + 1..rank {
            s -= r[(i, j)] * z[j];
        }
        z[i] = s / r[(i, i)];
    }
    let mut solution = vec![0.0; n];
    for (k, &p) in perm.iter().enumerate() {
        solution[p] = z[k];
    }
    let fitted = a.matvec(&solution);
    let residual_norm = fitted.iter().zip(b).map(|(f, b)| (f - b).powi(2)).sum::<f64>().sqrt();
    Ok(LeastSquares { solution, rank, residual_norm })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lstsq_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let a = Mat::from_fn(5, 2, |i, j| if j == 0 { 1.0 } else { xs[i] });
        let b: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let ls = lstsq(&a, &b, 1e-12).unwrap();
        assert_eq!(ls.rank, 2);
        assert!((ls.solution[0] - 2.0).abs() < 1e-12);
        assert!((ls.solution[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn lstsq_reports_rank_loss() {
        let a = Mat::from_fn(4, 3, |i, j| if j == 2 { (i as f64) * 2.0 } else { (i as f64) + j as f64 });
        let b = vec![1.0, 2.0, 3.0, 4.0];
        let ls = lstsq(&a, &b, 1e-10).unwrap();
        assert_eq!(ls.rank, 2);
    }

    #[test]
    fn lu_solves() {
        let a = Mat::from_rows(&[vec![0.0, 2.0], vec![3.0, 1.0]]);
        let x = solve_lu(&a, &[4.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
    }
}
