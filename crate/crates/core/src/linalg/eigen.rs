use super::qr::Lu;
use super::{dot, norm2, Mat};
use crate::error::{Error, Result};

const MAX_QR_SWEEPS: usize = 30;

/// Eigenvalues in ascending order, eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

/// Symmetric eigendecomposition by Householder tridiagonalisation and implicit QL.
pub fn symmetric_eigen(m: &Mat) -> Result<EigenPairs> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("{}x{} matrix is not square", m.rows(), m.cols())));
    }
    let n = m.rows();
    if n == 0 {
        return Ok(EigenPairs { values: vec![], vectors: Mat::zeros(0, 0) });
    }
    let mut z: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| 0.5 * (m[(i, j)] + m[(j, i)])).collect())
        .collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut z, &mut d, &mut e);
    tridiagonal_ql(&mut d, &mut e, &mut z)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = Mat::from_fn(n, n, |r, c| z[r][order[c]]);
    Ok(EigenPairs { values, vectors })
}

fn tridiagonalize(z: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = z.len();
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| z[i][k].abs()).sum();
            if scale == 0.0 {
                e[i] = z[i][l];
            } else {
                for k in 0..=l {
                    z[i][k] /= scale;
                    h += z[i][k] * z[i][k];
                }
                let f = z[i][l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                z[i][l] = f - g;
                let mut f = 0.0;
                for j in 0..=l {
                    z[j][i] = z[i][j] / h;
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += z[j][k] * z[i][k];
                    }
                    for k in j + 1..=l {
                        g += z[k][j] * z[i][k];
                    }
                    e[j] = g / h;
                    f += e[j] * z[i][j];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = z[i][j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        z[j][k] -= f * e[k] + g * z[i][k];
                    }
                }
            }
        } else {
            e[i] = z[i][l];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let g: f64 = (0..i).map(|k| z[i][k] * z[k][j]).sum();
                for k in 0..i {
                    z[k][j] -= g * z[k][i];
                }
            }
        }
        d[i] = z[i][i];
        z[i][i] = 1.0;
        for j in 0..i {
            z[j][i] = 0.0;
            z[i][j] = 0.0;
        }
    }
}

fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut [Vec<f64>]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QR_SWEEPS {
                return Err(Error::NoConvergence { iterations: iter });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in z.iter_mut() {
                    let f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Largest singular value.
pub fn spectral_norm(m: &Mat) -> f64 {
    if m.rows() == 0 || m.cols() == 0 {
        return 0.0;
    }
    match symmetric_eigen(&m.transpose().matmul(m)) {
        Ok(eig) => eig.values.last().copied().unwrap_or(0.0).max(0.0).sqrt(),
        Err(_) => m.frobenius(),
    }
}

/// All eigenvalues of a general real matrix as `(re, im)` pairs.
pub fn general_eigenvalues(m: &Mat) -> Result<Vec<(f64, f64)>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("{}x{} matrix is not square", m.rows(), m.cols())));
    }
    let n = m.rows();
    if n == 0 {
        return Ok(vec![]);
    }
    if !m.is_finite() {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    // 1-based working copy keeps the Hessenberg bookkeeping readable.
    let mut a = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            a[i + 1][j + 1] = m[(i, j)];
        }
    }
    balance(&mut a, n);
    hessenberg(&mut a, n);
    for i in 1..=n {
        for j in 1..i.saturating_sub(1) {
            a[i][j] = 0.0;
        }
    }
    hessenberg_qr(&mut a, n)
}

fn balance(a: &mut [Vec<f64>], n: usize) {
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 1..=n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 1..=n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 1..=n {
                        a[i][j] *= g;
                    }
                    for row in a.iter_mut().skip(1) {
                        row[i] *= f;
                    }
                }
            }
        }
    }
}

fn hessenberg(a: &mut [Vec<f64>], n: usize) {
    for m in 2..n {
        let mut x: f64 = 0.0;
        let mut i = m;
        for j in m..=n {
            if a[j][m - 1].abs() > x.abs() {
                x = a[j][m - 1];
                i = j;
            }
        }
        if i != m {
            for j in m - 1..=n {
                let t = a[i][j];
                a[i][j] = a[m][j];
                a[m][j] = t;
            }
            for row in a.iter_mut().skip(1) {
                row.swap(i, m);
            }
        }
        if x != 0.0 {
            for i in m + 1..=n {
                let mut y = a[i][m - 1];
                if y != 0.0 {
                    y /= x;
                    a[i][m - 1] = y;
                    for j in m..=n {
                        a[i][j] -= y * a[m][j];
                    }
                    for j in 1..=n {
                        a[j][m] += y * a[j][i];
                    }
                }
            }
        }
    }
}

#[allow(clippy::many_single_char_names)]
fn hessenberg_qr(a: &mut [Vec<f64>], n: usize) -> Result<Vec<(f64, f64)>> {
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];
    let mut anorm = 0.0;
    for i in 1..=n {
        for j in i.max(2) - 1..=n {
            anorm += a[i][j].abs();
        }
    }
    let mut nn = n;
    let mut t = 0.0;
    let (mut p, mut q, mut r): (f64, f64, f64);
    let (mut x, mut y, mut z, mut w);
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            x = a[nn][nn];
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
            } else {
                y = a[nn - 1][nn - 1];
                w = a[nn][nn - 1] * a[nn - 1][nn];
                if l == nn - 1 {
                    p = 0.5 * (y - x);
                    q = p * p + w;
                    z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        z = p + z.copysign(p);
                        wr[nn - 1] = x + z;
                        wr[nn] = x + z;
                        if z != 0.0 {
                            wr[nn] = x - w / z;
                        }
                        wi[nn - 1] = 0.0;
                        wi[nn] = 0.0;
                    } else {
                        wr[nn - 1] = x + p;
                        wr[nn] = x + p;
                        wi[nn - 1] = -z;
                        wi[nn] = z;
                    }
                    nn -= 2;
                } else {
                    if its == MAX_QR_SWEEPS {
                        return Err(Error::NoConvergence { iterations: its });
                    }
                    if its == 10 || its == 20 {
                        t += x;
                        for (i, row) in a.iter_mut().enumerate().take(nn + 1).skip(1) {
                            row[i] -= x;
                        }
                        let s = a[nn][nn - 1].abs() + a[nn - 1][nn - 2].abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    let mut m = nn - 2;
                    loop {
                        z = a[m][m];
                        r = x - z;
                        let s = y - z;
                        p = (r * s - w) / a[m + 1][m] + a[m][m + 1];
                        q = a[m + 1][m + 1] - z - r - s;
                        r = a[m + 2][m + 1];
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m + 2..=nn {
                        a[i][i - 2] = 0.0;
                        if i != m + 2 {
                            a[i][i - 3] = 0.0;
                        }
                    }
                    let mut k = m;
                    while k < nn {
                        if k != m {
                            p = a[k][k - 1];
                            q = a[k + 1][k - 1];
                            r = 0.0;
                            if k != nn - 1 {
                                r = a[k + 2][k - 1];
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = (p * p + q * q + r * r).sqrt().copysign(p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    a[k][k - 1] = -a[k][k - 1];
                                }
                            } else {
                                a[k][k - 1] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                p = a[k][j] + q * a[k + 1][j];
                                if k != nn - 1 {
                                    p += r * a[k + 2][j];
                                    a[k + 2][j] -= p * z;
                                }
                                a[k + 1][j] -= p * y;
                                a[k][j] -= p * x;
                            }
                            let mmin = nn.min(k + 3);
                            for row in a.iter_mut().take(mmin + 1).skip(l) {
                                p = x * row[k] + y * row[k + 1];
                                if k != nn - 1 {
                                    p += z * row[k + 2];
                                    row[k + 2] -= p * r;
                                }
                                row[k + 1] -= p * q;
                                row[k] -= p;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if nn < 2 || l + 1 >= nn {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| (wr[i], wi[i])).collect())
}

/// Orthonormal basis of the eigenspace of `m` at `lambda`, found by subspace
/// inverse iteration. Returns the vectors whose residual `‖(m − λI)v‖` stays
/// below `tol`; fewer than `mult` vectors means the eigenvalue is defective.
pub(crate) fn eigenspace_basis(m: &Mat, lambda: f64, mult: usize, tol: f64) -> Vec<Vec<f64>> {
    let n = m.rows();
    let scale = spectral_norm(m).max(1.0);
    let shifted = Mat::from_fn(n, n, |i, j| m[(i, j)] - if i == j { lambda } else { 0.0 });
    let sigma_off = 1e-10 * scale;
    let near = Mat::from_fn(n, n, |i, j| shifted[(i, j)] - if i == j { sigma_off } else { 0.0 });
    let lu = Lu::factor(&near, 1e-14 * scale);

    let width = mult.min(n);
    let mut q: Vec<Vec<f64>> = (0..width)
        .map(|j| (0..n).map(|i| ((i + 1) as f64 * (j as f64 + 0.37) * 1.618).sin() + 0.1).collect())
        .collect();
    orthonormalize(&mut q);
    for _ in 0..8 {
        q = q.iter().map(|v| lu.solve(v)).collect();
        orthonormalize(&mut q);
    }

    // Rotate inside the subspace so that columns are ordered by residual.
    let r: Vec<Vec<f64>> = q.iter().map(|v| shifted.matvec(v)).collect();
    let gram = Mat::from_fn(width, width, |a, b| dot(&r[a], &r[b]));
    let rotation = match symmetric_eigen(&gram) {
        Ok(e) => e.vectors,
        Err(_) => Mat::identity(width),
    };
    let mut out = Vec::new();
    for c in 0..width {
        let mut v = vec![0.0; n];
        for (a, qa) in q.iter().enumerate() {
            let w = rotation[(a, c)];
            for (vi, qi) in v.iter_mut().zip(qa) {
                *vi += w * qi;
            }
        }
        let nv = norm2(&v);
        if nv == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        if norm2(&shifted.matvec(&v)) <= tol {
            out.push(v);
        }
    }
    out
}

fn orthonormalize(q: &mut [Vec<f64>]) {
    let n = q.first().map_or(0, Vec::len);
    for j in 0..q.len() {
        for _pass in 0..2 {
            for i in 0..j {
                let (head, tail) = q.split_at_mut(j);
                let proj = dot(&head[i], &tail[0]);
                for (x, y) in tail[0].iter_mut().zip(&head[i]) {
                    *x -= proj * y;
                }
            }
        }
        let nv = norm2(&q[j]);
        if nv < 1e-300 || !nv.is_finite() {
            q[j] = (0..n).map(|i| if i == j % n { 1.0 } else { 0.0 }).collect();
        } else {
            q[j].iter_mut().for_each(|x| *x /= nv);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_re(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        v
    }

    #[test]
    fn symmetric_matches_known_spectrum() {
        let m = Mat::from_rows(&[vec![2.0, 1.0, 0.0], vec![1.0, 2.0, 1.0], vec![0.0, 1.0, 2.0]]);
        let e = symmetric_eigen(&m).unwrap();
        let s2 = 2f64.sqrt();
        let expect = [2.0 - s2, 2.0, 2.0 + s2];
        for (a, b) in e.values.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        for c in 0..3 {
            let v = e.vectors.column(c);
            let mv = m.matvec(&v);
            for i in 0..3 {
                assert!((mv[i] - e.values[c] * v[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn general_finds_complex_pair() {
        let m = Mat::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]);
        let ev = sorted_re(general_eigenvalues(&m).unwrap());
        assert!((ev[0].1 + 1.0).abs() < 1e-12 && (ev[1].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn general_on_triangular() {
        let m = Mat::from_rows(&[
            vec![1.0, 5.0, -3.0, 2.0],
            vec![0.0, 4.0, 7.0, 1.0],
            vec![0.0, 0.0, -2.0, 8.0],
            vec![0.0, 0.0, 0.0, 3.0],
        ]);
        let ev = sorted_re(general_eigenvalues(&m).unwrap());
        let re: Vec<f64> = ev.iter().map(|e| e.0).collect();
        for (a, b) in re.iter().zip([-2.0, 1.0, 3.0, 4.0]) {
            assert!((a - b).abs() < 1e-10, "{re:?}");
        }
    }

    #[test]
    fn jordan_block_is_defective() {
        let m = Mat::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]);
        let basis = eigenspace_basis(&m, 1.0, 2, 1e-8);
        assert_eq!(basis.len(), 1);
    }

    #[test]
    fn repeated_eigenvalue_full_basis() {
        let m = Mat::from_rows(&[vec![3.0, 0.0, 0.0], vec![0.0, 3.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let basis = eigenspace_basis(&m, 3.0, 2, 1e-8);
        assert_eq!(basis.len(), 2);
    }
}
