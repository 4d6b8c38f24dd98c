//! Complex dense linear-algebra aliases and the few helpers the optimizers share.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CVec = DVector<C64>;
pub type CMat = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);

pub fn cvec_zeros(n: usize) -> CVec {
    CVec::from_element(n, ZERO)
}

/// Re tr(A B) without forming the product.
pub fn trace_product_re(a: &CMat, b: &CMat) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

pub fn trace_re(a: &CMat) -> f64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)].re).sum()
}

/// Hermitian part `(A + A^H) / 2`, removing round-off asymmetry.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues sorted descending.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitian_part(a));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Largest eigenvalue and its unit eigenvector.
pub fn leading_eigenpair(a: &CMat) -> (f64, CVec) {
    let (values, vectors) = hermitian_eigen(a);
    (values[0], vectors.column(0).into_owned())
}

pub fn min_eigenvalue(a: &CMat) -> f64 {
    let (values, _) = hermitian_eigen(a);
    values.last().copied().unwrap_or(0.0)
}

pub fn outer(x: &CVec) -> CMat {
    x * x.adjoint()
}

/// `x^H A x` for Hermitian `A` (real part).
pub fn quad_form(a: &CMat, x: &CVec) -> f64 {
    (x.adjoint() * a * x)[(0, 0)].re
}

/// Plain `x^H y`.
pub fn inner(x: &CVec, y: &CVec) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}
