//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{ComplexField, DMatrix, DVector, Dim, Matrix, Storage};

use crate::error::{DmaError, Result};
use crate::scalar::{cr, czero, Real, C};

pub type CMat<T> = DMatrix<C<T>>;
pub type CVec<T> = DVector<C<T>>;

pub fn hermitize<T: Real>(m: &CMat<T>) -> CMat<T> {
    (m + m.adjoint()) * cr(T::lit(0.5))
}

/// `‖M − M†‖_F`.
pub fn hermitian_defect<T: Real>(m: &CMat<T>) -> T {
    (m - m.adjoint()).norm()
}

pub fn trace<T: Real>(m: &CMat<T>) -> C<T> {
    m.diagonal().iter().fold(czero(), |acc, &x| acc + x)
}

/// Real part of `tr(A† B)` computed without forming the product.
pub fn re_inner<T, R, K, S1, S2>(a: &Matrix<C<T>, R, K, S1>, b: &Matrix<C<T>, R, K, S2>) -> T
where
    T: Real,
    R: Dim,
    K: Dim,
    S1: Storage<C<T>, R, K>,
    S2: Storage<C<T>, R, K>,
{
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (x, y)| acc + (x.conj() * y).re)
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues<T: Real>(m: &CMat<T>) -> Vec<T> {
    let mut ev: Vec<T> = hermitize(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

pub fn min_eigenvalue<T: Real>(m: &CMat<T>) -> T {
    hermitian_eigenvalues(m)
        .first()
        .copied()
        .unwrap_or_else(T::zero)
}

pub fn is_finite<T: Real>(m: &CMat<T>) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Solves `A X = B` for Hermitian positive definite `A`.
///
/// When the spectral condition number exceeds `max_condition` the system is
/// regularized with `ridge · tr(A)/n · I` before factorization.
pub fn solve_hpd<T: Real>(
    a: &CMat<T>,
    b: &CMat<T>,
    max_condition: T,
    ridge: T,
) -> Result<CMat<T>> {
    if !is_finite(a) || !is_finite(b) {
        return Err(DmaError::numerical("non-finite entries in linear system"));
    }
    let n = a.nrows();
    let mut a = hermitize(a);
    let ev = hermitian_eigenvalues(&a);
    let (lo, hi) = (ev[0], ev[n - 1]);
    if hi <= T::zero() {
        return Err(DmaError::numerical("covariance is not positive definite"));
    }
    if lo <= T::zero() || hi / lo > max_condition {
        let shift = ridge * trace(&a).re / T::from_usize(n).unwrap();
        for i in 0..n {
            a[(i, i)] += cr(shift);
        }
    }
    let chol = a
        .cholesky()
        .ok_or_else(|| DmaError::numerical("Cholesky factorization failed after regularization"))?;
    let x = chol.solve(b);
    if !is_finite(&x) {
        return Err(DmaError::numerical("non-finite solution"));
    }
    Ok(x)
}

/// Magnitude of a complex number.
#[inline]
pub fn modulus<T: Real>(z: C<T>) -> T {
    z.modulus()
}
