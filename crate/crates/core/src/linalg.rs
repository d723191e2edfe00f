//! Small dense complex matrix helpers. Bundle ranks are tiny (1 or 2), so
//! everything here works on `DMatrix` without caring about allocation.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn eye(m: usize) -> CMat {
    CMat::identity(m, m)
}

pub fn scalar(m: usize, v: f64) -> CMat {
    CMat::identity(m, m) * c(v)
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * c(0.5)
}

pub fn trace(a: &CMat) -> C64 {
    a.trace()
}

pub fn inverse(a: &CMat) -> Option<CMat> {
    a.clone().try_inverse()
}

/// Eigenvalues of the Hermitian part, ascending.
pub fn herm_eigs(a: &CMat) -> Vec<f64> {
    let mut v: Vec<f64> = hermitian_part(a)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    v.sort_by(|x, y| x.total_cmp(y));
    v
}

pub fn min_eig(a: &CMat) -> f64 {
    herm_eigs(a)[0]
}

/// Largest singular value.
pub fn spectral_norm(a: &CMat) -> f64 {
    match (a.nrows(), a.ncols()) {
        (1, 1) => return a[(0, 0)].norm(),
        (2, 2) => {
            let f = a.norm_squared();
            let det = (a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)]).norm();
            return (0.5 * (f + (f * f - 4.0 * det * det).max(0.0).sqrt())).sqrt();
        }
        _ => {}
    }
    let g = a.adjoint() * a;
    herm_eigs(&g).last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// `f(A)` for Hermitian `A` through its eigendecomposition.
pub fn herm_fn(a: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let eig = hermitian_part(a).symmetric_eigen();
    let d = CMat::from_diagonal(&eig.eigenvalues.map(|x| c(f(x))));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Eigenvalues of an endomorphism that is self-adjoint with respect to the
/// Gram matrix `k` (so `k a` is Hermitian). They are real.
pub fn selfadjoint_eigs(a: &CMat, k: &CMat) -> Vec<f64> {
    let s = herm_fn(k, f64::sqrt);
    let si = herm_fn(k, |x| 1.0 / x.sqrt());
    herm_eigs(&(&s * a * &si))
}

/// Project onto endomorphisms self-adjoint for the Gram matrix `k`:
/// `a ↦ ½(a + k⁻¹ a† k)`.
pub fn selfadjoint_part(a: &CMat, k: &CMat, k_inv: &CMat) -> CMat {
    (a + k_inv * a.adjoint() * k) * c(0.5)
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Column-major vectorisation index of entry `(i, j)` in an `m×m` matrix.
pub fn vec_index(m: usize, i: usize, j: usize) -> usize {
    j * m + i
}

/// Matrix of the linear map `x ↦ l x r` acting on column-major vectorised
/// `m×m` matrices, i.e. `rᵀ ⊗ l`.
pub fn left_right(l: &CMat, r: &CMat) -> CMat {
    r.transpose().kronecker(l)
}

pub fn vectorize(a: &CMat) -> Vec<C64> {
    a.iter().copied().collect()
}

pub fn unvectorize(m: usize, v: &[C64]) -> CMat {
    CMat::from_column_slice(m, m, v)
}
