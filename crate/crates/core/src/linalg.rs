//! Small dense linear-algebra helpers for complex Hermitian matrices.

use nalgebra::{Complex, ComplexField, DMatrix};

use crate::scalar::{lit, CMatrix, Real};

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_asymmetry<T: Real>(m: &CMatrix<T>) -> T {
    let n = m.nrows();
    let mut worst = T::zero();
    for i in 0..n {
        for j in i..n {
            let d = (m[(i, j)] - m[(j, i)].conj()).modulus();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order. Columns of the returned matrix are the eigenvectors.
pub fn eigh_desc<T: Real>(m: &CMatrix<T>) -> (Vec<T>, CMatrix<T>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Real part of `Tr(Aᴴ B)`.
pub fn frobenius_inner<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (x, y)| acc + (x.conj() * y).re)
}

/// Real part of the trace.
pub fn trace_re<T: Real>(m: &CMatrix<T>) -> T {
    (0..m.nrows().min(m.ncols())).fold(T::zero(), |acc, i| acc + m[(i, i)].re)
}

/// Largest entrywise deviation of `UᴴU` from the identity.
pub fn orthonormality_deviation<T: Real>(u: &CMatrix<T>) -> T {
    let g = u.adjoint() * u;
    let mut worst = T::zero();
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { T::one() } else { T::zero() };
            let d = (g[(i, j)] - Complex::new(target, T::zero())).modulus();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Orthonormal basis of the orthogonal complement of the column span of `xi`
/// (equivalently, of the null space of `xiᴴ`).
///
/// Singular values below `rel_tol · σ_max` are treated as zero. The basis is
/// taken from the full eigenbasis of `xi xiᴴ`, so it is complete even when
/// `xi` is wide or rank deficient.
pub fn orthogonal_complement<T: Real>(xi: &CMatrix<T>, rel_tol: T) -> CMatrix<T> {
    let n = xi.nrows();
    if xi.ncols() == 0 {
        return CMatrix::identity(n, n);
    }
    let sv = xi.clone().singular_values();
    let smax = sv.iter().fold(T::zero(), |a, &s| if s > a { s } else { a });
    if smax <= T::zero() {
        return CMatrix::identity(n, n);
    }
    let rank = sv.iter().filter(|&&s| s > rel_tol * smax).count().min(n);
    let gram = xi * xi.adjoint();
    let (_, vecs) = eigh_desc(&gram);
    vecs.columns(rank, n - rank).into_owned()
}

/// Inverse of a Hermitian positive definite matrix, falling back to LU when the
/// Cholesky factorization fails.
pub fn hermitian_inverse<T: Real>(m: &CMatrix<T>) -> Option<CMatrix<T>> {
    if let Some(ch) = m.clone().cholesky() {
        return Some(ch.inverse());
    }
    m.clone().try_inverse()
}

/// Projection `Bᴴ R B`.
pub fn project<T: Real>(r: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    b.adjoint() * r * b
}

/// Frobenius norm.
pub fn frobenius_norm<T: Real>(m: &CMatrix<T>) -> T {
    m.iter()
        .fold(T::zero(), |acc, z| acc + z.norm_sqr())
        .sqrt()
}

/// Forces exact Hermitian symmetry by averaging with the adjoint.
pub fn symmetrize<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    (m + m.adjoint()).map(|z| z * Complex::new(lit::<T>(0.5), T::zero()))
}

/// Embeds a real matrix as a complex one.
pub fn complexify<T: Real>(m: &DMatrix<T>) -> CMatrix<T> {
    m.map(|x| Complex::new(x, T::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn eigenvalues_come_back_descending() {
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(5.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(0.0, 0.0),
                c(3.0, 0.0),
            ],
        );
        let (vals, vecs) = eigh_desc(&m);
        assert_eq!(vals.len(), 3);
        assert!((vals[0] - 5.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        assert!((vals[2] - 1.0).abs() < 1e-12);
        assert!(orthonormality_deviation(&vecs) < 1e-12);
    }

    #[test]
    fn complement_is_orthogonal_to_span() {
        let xi = CMatrix::from_fn(6, 2, |r, col| c((r + col) as f64, (r * col) as f64 * 0.5));
        let e0 = orthogonal_complement(&xi, 1e-9);
        assert_eq!(e0.ncols(), 4);
        assert!(orthonormality_deviation(&e0) < 1e-10);
        let leak = xi.adjoint() * &e0;
        assert!(leak.iter().all(|z| z.norm() < 1e-9));
    }

    #[test]
    fn complement_of_empty_is_identity() {
        let xi: CMatrix<f64> = CMatrix::zeros(4, 0);
        assert_eq!(orthogonal_complement(&xi, 1e-9), CMatrix::identity(4, 4));
    }

    #[test]
    fn hermitian_asymmetry_detects_violation() {
        let mut m: CMatrix<f64> = CMatrix::identity(2, 2);
        assert_eq!(hermitian_asymmetry(&m), 0.0);
        m[(0, 1)] = c(0.0, 1.0);
        m[(1, 0)] = c(0.0, 1.0);
        assert!((hermitian_asymmetry(&m) - 2.0).abs() < 1e-15);
    }
}
