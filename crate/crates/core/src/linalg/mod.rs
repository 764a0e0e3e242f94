//! Small dense linear algebra: just enough for Kp×Kp drift matrices,
//! Savitzky–Golay design matrices and basis fits.

mod eigen;
mod mat;
mod qr;

pub use eigen::{general_eigenvalues, spectral_norm, symmetric_eigen, EigenPairs};
pub use mat::Mat;
pub use qr::{lstsq, solve_lu, LeastSquares};

pub(crate) use eigen::eigenspace_basis;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
