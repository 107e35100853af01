//! Small dense-matrix helpers shared by the state builders and evaluators.

use nalgebra::DMatrix;
use ndarray::{linalg::kron as nd_kron, Array2};
use num_complex::Complex64 as C64;

pub type CMatrix = Array2<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    nd_kron(a, b)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diag().iter().sum()
}

/// Largest elementwise |m - m†|.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    dev
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let n = m.nrows();
    let sym = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[[i, j]] + m[[j, i]].conj()));
    let eig = nalgebra::SymmetricEigen::new(sym);
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

/// Leading eigenvector of a Hermitian matrix.
pub fn leading_eigenvector(m: &CMatrix) -> Vec<C64> {
    let n = m.nrows();
    let sym = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[[i, j]] + m[[j, i]].conj()));
    let eig = nalgebra::SymmetricEigen::new(sym);
    let mut best = 0;
    for k in 1..n {
        if eig.eigenvalues[k] > eig.eigenvalues[best] {
            best = k;
        }
    }
    eig.eigenvectors.column(best).iter().copied().collect()
}

/// Operator 2-norm of a Hermitian matrix.
pub fn hermitian_norm(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m)
        .into_iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn identity(n: usize) -> CMatrix {
    Array2::from_shape_fn((n, n), |(i, j)| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}
