//! Covariance similarity measures.

use crate::channel::CovarianceMatrix;
use crate::error::{Error, Result};
use crate::linalg::{frobenius_inner, frobenius_norm, orthonormality_deviation};
use crate::scalar::{count, lit, to_f64, CMatrix, Real};

/// Which measure populated a [`SimilarityMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Degree of overlap, 1 on the diagonal.
    Dol,
    /// `1 − d / (r_i + r_j)` where `d` is the squared chordal distance, so that
    /// identical subspaces score 1 and orthogonal ones 0.
    Chordal,
}

/// Symmetric `K × K` matrix of pairwise similarities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix<T: Real> {
    values: Vec<T>,
    size: usize,
    metric: Metric,
}

impl<T: Real> SimilarityMatrix<T> {
    /// Wraps a row-major `K × K` table. The table must be symmetric.
    pub fn from_values(size: usize, values: Vec<T>, metric: Metric) -> Result<Self> {
        if values.len() != size * size {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {size}x{size} similarity matrix",
                values.len()
            )));
        }
        for i in 0..size {
            for j in (i + 1)..size {
                if values[i * size + j] != values[j * size + i] {
                    return Err(Error::InvalidArgument(format!("similarity not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { values, size, metric })
    }

    /// Pairwise DOL over a set of covariances.
    pub fn dol(covariances: &[CovarianceMatrix<T>]) -> Result<Self> {
        Self::pairwise(covariances, Metric::Dol, |a, b| dol(a, b))
    }

    /// Pairwise chordal-derived similarity over the truncated eigenbases.
    pub fn chordal(covariances: &[CovarianceMatrix<T>]) -> Result<Self> {
        Self::pairwise(covariances, Metric::Chordal, |a, b| {
            let d = chordal_distance(a.eigenvectors(), b.eigenvectors())?;
            let span = count::<T>(a.effective_rank() + b.effective_rank());
            Ok(if span > T::zero() { T::one() - d / span } else { T::one() })
        })
    }

    fn pairwise<F>(covariances: &[CovarianceMatrix<T>], metric: Metric, f: F) -> Result<Self>
    where
        F: Fn(&CovarianceMatrix<T>, &CovarianceMatrix<T>) -> Result<T>,
    {
        let k = covariances.len();
        let mut values = vec![T::zero(); k * k];
        for i in 0..k {
            values[i * k + i] = T::one();
            for j in (i + 1)..k {
                let v = f(&covariances[i], &covariances[j])?;
                values[i * k + j] = v;
                values[j * k + i] = v;
            }
        }
        Ok(Self { values, size: k, metric })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.size + j]
    }
}

/// Degree of overlap `Re Tr(R1ᴴ R2) / (‖R1‖_F ‖R2‖_F)`.
pub fn dol<T: Real>(r1: &CovarianceMatrix<T>, r2: &CovarianceMatrix<T>) -> Result<T> {
    dol_entries(r1.entries(), r2.entries())
}

/// [`dol`] on raw matrices.
pub fn dol_entries<T: Real>(r1: &CMatrix<T>, r2: &CMatrix<T>) -> Result<T> {
    if r1.shape() != r2.shape() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", r1.shape(), r2.shape())));
    }
    let n1 = frobenius_norm(r1);
    let n2 = frobenius_norm(r2);
    if !(n1 > T::zero() && n2 > T::zero()) {
        return Err(Error::UndefinedSimilarity);
    }
    Ok(frobenius_inner(r1, r2) / (n1 * n2))
}

/// Squared chordal distance `‖U1U1ᴴ − U2U2ᴴ‖_F²` between two subspaces given by
/// orthonormal bases.
pub fn chordal_distance<T: Real>(u1: &CMatrix<T>, u2: &CMatrix<T>) -> Result<T> {
    if u1.nrows() != u2.nrows() {
        return Err(Error::DimensionMismatch(format!("{} vs {} rows", u1.nrows(), u2.nrows())));
    }
    let tol = lit::<T>(1e-8).max(lit::<T>(1000.0) * T::eps());
    for u in [u1, u2] {
        let dev = orthonormality_deviation(u);
        if dev > tol {
            return Err(Error::NotOrthonormal { deviation: to_f64(dev) });
        }
    }
    // ‖P1 − P2‖² = r1 + r2 − 2‖U1ᴴU2‖²
    let cross = u1.adjoint() * u2;
    let overlap = cross.iter().fold(T::zero(), |a, z| a + z.norm_sqr());
    let d = count::<T>(u1.ncols() + u2.ncols()) - overlap - overlap;
    Ok(d.max(T::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{one_ring_covariance, AntennaArray, UserProfile};
    use nalgebra::Complex;

    fn ring(n: usize, theta: f64) -> CovarianceMatrix<f64> {
        let array = AntennaArray::half_wavelength_ula(n).unwrap();
        let user = UserProfile::new(0, theta.to_radians(), 5f64.to_radians()).unwrap();
        one_ring_covariance(&array, &user, 512).unwrap()
    }

    fn diag(values: &[f64]) -> CovarianceMatrix<f64> {
        let n = values.len();
        let m = CMatrix::from_fn(n, n, |i, j| Complex::new(if i == j { values[i] } else { 0.0 }, 0.0));
        CovarianceMatrix::from_entries(m, 1.0).unwrap()
    }

    #[test]
    fn self_overlap_is_one() {
        let r = ring(16, 10.0);
        assert!((dol(&r, &r).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_support_gives_zero() {
        let a = diag(&[1.0, 2.0, 0.0, 0.0]);
        let b = diag(&[0.0, 0.0, 3.0, 1.0]);
        assert_eq!(dol(&a, &b).unwrap(), 0.0);
        let d = chordal_distance(a.eigenvectors(), b.eigenvectors()).unwrap();
        assert!((d - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_is_undefined() {
        let z = diag(&[0.0, 0.0]);
        let a = diag(&[1.0, 1.0]);
        assert_eq!(dol(&z, &a), Err(Error::UndefinedSimilarity));
    }

    #[test]
    fn dol_is_scale_invariant() {
        let a = ring(12, 0.0);
        let b = ring(12, 4.0);
        let base = dol(&a, &b).unwrap();
        let scaled = dol(&a.scaled(3.0), &b.scaled(0.2)).unwrap();
        assert!((base - scaled).abs() < 1e-12);
    }

    #[test]
    fn chordal_identical_is_zero() {
        let a = ring(16, 5.0);
        assert!(chordal_distance(a.eigenvectors(), a.eigenvectors()).unwrap() < 1e-10);
    }

    #[test]
    fn chordal_rejects_non_orthonormal() {
        let u = CMatrix::<f64>::from_element(4, 1, Complex::new(1.0, 0.0));
        assert!(matches!(chordal_distance(&u, &u), Err(Error::NotOrthonormal { .. })));
    }

    #[test]
    fn matrix_is_symmetric_with_unit_diagonal() {
        let covs: Vec<_> = [0.0, 3.0, 20.0].iter().map(|&t| ring(16, t)).collect();
        let s = SimilarityMatrix::dol(&covs).unwrap();
        for i in 0..3 {
            assert_eq!(s.get(i, i), 1.0);
            for j in 0..3 {
                assert_eq!(s.get(i, j), s.get(j, i));
                assert!(s.get(i, j) >= -1e-12 && s.get(i, j) <= 1.0 + 1e-12);
            }
        }
        let c = SimilarityMatrix::chordal(&covs).unwrap();
        assert_eq!(c.metric(), Metric::Chordal);
        assert!(c.get(0, 1) > c.get(0, 2));
    }
}
