//! Real representation of complex Hermitian matrices.
//!
//! Convention: `H = B + iC` maps to the real block matrix
//! `[[B, -C], [C, B]]` of twice the order. Under this map,
//!
//! - Hermitian maps to symmetric, and positive (semi)definiteness is
//!   preserved in both directions;
//! - the map is an algebra homomorphism, so `realify(A)^-1 = realify(A^-1)`;
//! - traces double: `tr(realify(A) realify(B)) = 2 Re tr(A B)`;
//! - `ln det realify(A) = 2 ln det A` for Hermitian positive definite `A`.
//!
//! The PSD barrier solver runs all of its factorization work through this
//! representation, so only real Cholesky factors are ever formed.

use nalgebra::{Cholesky, Complex, DMatrix, DVector, Dyn};

use crate::scalar::{CMatrix, CVector, Real};

/// `H = B + iC  ->  [[B, -C], [C, B]]`.
pub fn realify<T: Real>(h: &CMatrix<T>) -> DMatrix<T> {
    let n = h.nrows();
    debug_assert_eq!(h.nrows(), h.ncols());
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let (bi, bj) = (i % n, j % n);
        match (i >= n, j >= n) {
            (false, false) | (true, true) => h[(bi, bj)].re,
            (false, true) => -h[(bi, bj)].im,
            (true, false) => h[(bi, bj)].im,
        }
    })
}

/// Inverse of [`realify`]; averages the duplicated blocks.
pub fn derealify<T: Real>(r: &DMatrix<T>) -> CMatrix<T> {
    let n2 = r.nrows();
    debug_assert_eq!(n2 % 2, 0);
    let n = n2 / 2;
    let half = T::from_f64(0.5).expect("0.5 representable");
    CMatrix::from_fn(n, n, |i, j| {
        let re = (r[(i, j)] + r[(i + n, j + n)]) * half;
        let im = (r[(i + n, j)] - r[(i, j + n)]) * half;
        Complex::new(re, im)
    })
}

/// `x = u + iv  ->  [u; v]`, matching the quadratic-form convention
/// `Re(x^H A x) = realify(x)^T realify(A) realify(x)`.
pub fn realify_vector<T: Real>(x: &CVector<T>) -> DVector<T> {
    let n = x.len();
    DVector::from_fn(2 * n, |i, _| if i < n { x[i].re } else { x[i - n].im })
}

/// Cholesky of the real representation; `None` when `h` is not Hermitian
/// positive definite.
pub fn hermitian_cholesky<T: Real>(h: &CMatrix<T>) -> Option<Cholesky<T, Dyn>> {
    Cholesky::new(realify(h))
}

/// `ln det h` for Hermitian positive definite `h` (half the realified
/// log-determinant).
pub fn hermitian_logdet<T: Real>(h: &CMatrix<T>) -> Option<T> {
    let chol = hermitian_cholesky(h)?;
    let l = chol.l_dirty();
    let mut acc = T::zero();
    for i in 0..l.nrows() {
        let d = l[(i, i)];
        if !(d > T::zero()) {
            return None;
        }
        acc += d.ln();
    }
    // realified logdet = 2 * acc; complex logdet is half of that.
    Some(acc)
}

/// Inverse of a Hermitian positive definite matrix, computed through the
/// real representation.
pub fn hermitian_inverse<T: Real>(h: &CMatrix<T>) -> Option<CMatrix<T>> {
    let chol = hermitian_cholesky(h)?;
    Some(derealify(&chol.inverse()))
}
