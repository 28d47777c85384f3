//! Antenna geometry, one-ring spatial covariances and Rayleigh channel draws.

use nalgebra::{Complex, ComplexField};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{eigh_desc, hermitian_asymmetry};
use crate::scalar::{count, lit, CMatrix, CVector, Real};

/// Default Simpson subinterval count for the one-ring integral.
pub const DEFAULT_QUADRATURE_POINTS: usize = 512;
/// Default fraction of the trace retained by the rank truncation.
pub const DEFAULT_ENERGY_FRACTION: f64 = 0.9999;
/// Smallest accepted quadrature resolution.
pub const MIN_QUADRATURE_POINTS: usize = 64;

/// Planar antenna array. Positions are in the same length unit as the
/// wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct AntennaArray<T: Real> {
    positions: Vec<[T; 2]>,
    wavelength: T,
}

impl<T: Real> AntennaArray<T> {
    pub fn new(positions: Vec<[T; 2]>, wavelength: T) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidArgument("array needs at least one antenna".into()));
        }
        if wavelength <= T::zero() {
            return Err(Error::InvalidArgument("wavelength must be positive".into()));
        }
        Ok(Self { positions, wavelength })
    }

    /// Half-wavelength uniform linear array laid out along the y-axis, so that
    /// broadside points along the x-axis (the sector centre). The wavelength is
    /// normalized to 1.
    pub fn half_wavelength_ula(num_antennas: usize) -> Result<Self> {
        let half = lit::<T>(0.5);
        let positions = (0..num_antennas)
            .map(|m| [T::zero(), half * count::<T>(m)])
            .collect();
        Self::new(positions, T::one())
    }

    pub fn num_antennas(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[[T; 2]] {
        &self.positions
    }

    pub fn wavelength(&self) -> T {
        self.wavelength
    }
}

/// Angular parameters of one user terminal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserProfile<T: Real> {
    pub user_id: usize,
    /// Azimuth of the scattering ring centre, radians.
    pub azimuth: T,
    /// Half-width of the angular spread, radians.
    pub angular_spread: T,
    /// Large-scale power scale applied to the covariance.
    pub pathloss_scale: T,
}

impl<T: Real> UserProfile<T> {
    pub fn new(user_id: usize, azimuth: T, angular_spread: T) -> Result<Self> {
        Self::with_pathloss(user_id, azimuth, angular_spread, T::one())
    }

    pub fn with_pathloss(user_id: usize, azimuth: T, angular_spread: T, pathloss_scale: T) -> Result<Self> {
        if !(angular_spread > T::zero()) {
            return Err(Error::InvalidArgument("angular spread must be positive".into()));
        }
        if !(pathloss_scale > T::zero()) {
            return Err(Error::InvalidArgument("pathloss scale must be positive".into()));
        }
        Ok(Self { user_id, azimuth, angular_spread, pathloss_scale })
    }
}

/// Draws `count` users with azimuth uniform in `sector` (radians) and a common
/// angular spread.
pub fn generate_users<T: Real, R: Rng + ?Sized>(
    num_users: usize,
    sector: (T, T),
    angular_spread: T,
    rng: &mut R,
) -> Result<Vec<UserProfile<T>>> {
    let (lo, hi) = sector;
    if !(hi > lo) {
        return Err(Error::InvalidArgument("sector bounds must satisfy lo < hi".into()));
    }
    (0..num_users)
        .map(|id| {
            let u: f64 = rng.random();
            UserProfile::new(id, lo + (hi - lo) * lit::<T>(u), angular_spread)
        })
        .collect()
}

/// Truncated eigen-decomposition `R ≈ U Λ Uᴴ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition<T: Real> {
    /// `N × r` matrix with orthonormal columns.
    pub eigenvectors: CMatrix<T>,
    /// `r` retained eigenvalues, descending and strictly positive.
    pub eigenvalues: Vec<T>,
}

impl<T: Real> Decomposition<T> {
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn reconstruct(&self) -> CMatrix<T> {
        let scaled = CMatrix::from_fn(self.eigenvectors.nrows(), self.rank(), |r, c| {
            self.eigenvectors[(r, c)] * Complex::new(self.eigenvalues[c], T::zero())
        });
        scaled * self.eigenvectors.adjoint()
    }
}

/// Hermitian PSD spatial covariance with its cached truncated decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix<T: Real> {
    entries: CMatrix<T>,
    decomposition: Decomposition<T>,
    energy_fraction: T,
}

impl<T: Real> CovarianceMatrix<T> {
    pub fn from_entries(entries: CMatrix<T>, energy_fraction: T) -> Result<Self> {
        let decomposition = eigendecompose(&entries, energy_fraction)?;
        Ok(Self { entries, decomposition, energy_fraction })
    }

    pub fn entries(&self) -> &CMatrix<T> {
        &self.entries
    }

    pub fn eigenvectors(&self) -> &CMatrix<T> {
        &self.decomposition.eigenvectors
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.decomposition.eigenvalues
    }

    pub fn decomposition(&self) -> &Decomposition<T> {
        &self.decomposition
    }

    pub fn effective_rank(&self) -> usize {
        self.decomposition.rank()
    }

    pub fn energy_fraction(&self) -> T {
        self.energy_fraction
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> T {
        crate::linalg::trace_re(&self.entries)
    }

    /// Returns `κ·R`, re-using the eigenvectors.
    pub fn scaled(&self, kappa: T) -> Self {
        let k = Complex::new(kappa, T::zero());
        Self {
            entries: self.entries.map(|z| z * k),
            decomposition: Decomposition {
                eigenvectors: self.decomposition.eigenvectors.clone(),
                eigenvalues: self.decomposition.eigenvalues.iter().map(|&l| l * kappa).collect(),
            },
            energy_fraction: self.energy_fraction,
        }
    }
}

/// Raw one-ring covariance entries (before any pathloss scaling), computed by
/// composite Simpson quadrature over `[θ−Δ, θ+Δ]` with `subintervals` panels.
///
/// Only the upper triangle is integrated; the lower triangle is its conjugate
/// mirror and the diagonal is exactly one.
pub fn one_ring_entries<T: Real>(
    array: &AntennaArray<T>,
    user: &UserProfile<T>,
    subintervals: usize,
) -> Result<CMatrix<T>> {
    if subintervals < MIN_QUADRATURE_POINTS {
        return Err(Error::InvalidArgument(format!(
            "quadrature_points must be at least {MIN_QUADRATURE_POINTS}"
        )));
    }
    if !(user.angular_spread > T::zero()) {
        return Err(Error::InvalidArgument("angular spread must be positive".into()));
    }
    let panels = subintervals + subintervals % 2;
    let n = array.num_antennas();
    let spread = user.angular_spread;
    let lo = user.azimuth - spread;
    let h = (spread + spread) / count::<T>(panels);
    let two_pi_over_lambda = T::two_pi() / array.wavelength();

    // Steering samples a_m(α_i) = exp(j kᵀ(α_i) u_m) with k = −(2π/λ)(cos α, sin α),
    // pre-multiplied by sqrt of the Simpson weight so that R = A Aᴴ / (2Δ).
    let nodes = panels + 1;
    let mut steer = CMatrix::<T>::zeros(n, nodes);
    for i in 0..nodes {
        let alpha = lo + h * count::<T>(i);
        let simpson = if i == 0 || i == panels {
            T::one()
        } else if i % 2 == 1 {
            lit(4.0)
        } else {
            lit(2.0)
        };
        let w = (simpson * h / lit(3.0)).sqrt();
        let (s, c) = alpha.sin_cos();
        for (m, pos) in array.positions().iter().enumerate() {
            let phase = -two_pi_over_lambda * (c * pos[0] + s * pos[1]);
            let (ps, pc) = phase.sin_cos();
            steer[(m, i)] = Complex::new(pc * w, ps * w);
        }
    }
    let norm = T::one() / (spread + spread);
    let mut r = CMatrix::<T>::zeros(n, n);
    for m in 0..n {
        r[(m, m)] = Complex::new(T::one(), T::zero());
        for p in (m + 1)..n {
            let mut acc = Complex::new(T::zero(), T::zero());
            for i in 0..nodes {
                acc += steer[(m, i)] * steer[(p, i)].conj();
            }
            let v = acc * Complex::new(norm, T::zero());
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NumericalIntegration { row: m, col: p });
            }
            r[(m, p)] = v;
            r[(p, m)] = v.conj();
        }
    }
    Ok(r)
}

/// One-ring covariance `κ·R` with the default energy-capture truncation.
pub fn one_ring_covariance<T: Real>(
    array: &AntennaArray<T>,
    user: &UserProfile<T>,
    quadrature_points: usize,
) -> Result<CovarianceMatrix<T>> {
    one_ring_covariance_with(array, user, quadrature_points, lit(DEFAULT_ENERGY_FRACTION))
}

pub fn one_ring_covariance_with<T: Real>(
    array: &AntennaArray<T>,
    user: &UserProfile<T>,
    quadrature_points: usize,
    energy_fraction: T,
) -> Result<CovarianceMatrix<T>> {
    let kappa = Complex::new(user.pathloss_scale, T::zero());
    let entries = one_ring_entries(array, user, quadrature_points)?.map(|z| z * kappa);
    CovarianceMatrix::from_entries(entries, energy_fraction)
}

/// Eigen-decomposition keeping the smallest number of leading modes whose
/// eigenvalues capture at least `energy_fraction` of the trace.
pub fn eigendecompose<T: Real>(r: &CMatrix<T>, energy_fraction: T) -> Result<Decomposition<T>> {
    if r.nrows() != r.ncols() {
        return Err(Error::DimensionMismatch(format!("{}x{} covariance", r.nrows(), r.ncols())));
    }
    if !(energy_fraction > T::zero() && energy_fraction <= T::one()) {
        return Err(Error::InvalidArgument("energy_fraction must lie in (0, 1]".into()));
    }
    let n = r.nrows();
    let scale = r.iter().fold(T::one(), |a, z| if z.modulus() > a { z.modulus() } else { a });
    let tol = (lit::<T>(1e-10)).max(lit::<T>(100.0) * T::eps()) * scale;
    let asym = hermitian_asymmetry(r);
    if asym > tol {
        return Err(Error::NotHermitian { asymmetry: crate::scalar::to_f64(asym) });
    }
    let (values, vectors) = eigh_desc(r);
    let positive: Vec<T> = values.iter().map(|&v| v.max(T::zero())).collect();
    let total = positive.iter().fold(T::zero(), |a, &v| a + v);
    let mut rank = 0;
    if total > T::zero() {
        let target = energy_fraction * total - total * T::eps() * count::<T>(n.max(1));
        let floor = total * T::eps();
        let mut acc = T::zero();
        for &v in &positive {
            if v <= floor || acc >= target {
                break;
            }
            acc += v;
            rank += 1;
        }
    }
    Ok(Decomposition {
        eigenvectors: vectors.columns(0, rank).into_owned(),
        eigenvalues: positive[..rank].to_vec(),
    })
}

/// Draws `h ~ CN(0, R)` as `U Λ^{1/2} w` with `w ~ CN(0, I_r)`.
pub fn draw_channel<T: Real, R: Rng + ?Sized>(cov: &CovarianceMatrix<T>, rng: &mut R) -> CVector<T> {
    let dec = cov.decomposition();
    let n = cov.dim();
    let mut h = CVector::<T>::zeros(n);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for (k, &lambda) in dec.eigenvalues.iter().enumerate() {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        let w = Complex::new(lit::<T>(re * inv_sqrt2), lit::<T>(im * inv_sqrt2)) * Complex::new(lambda.sqrt(), T::zero());
        for m in 0..n {
            h[m] += dec.eigenvectors[(m, k)] * w;
        }
    }
    h
}

/// Convenience wrapper that seeds a dedicated ChaCha stream.
pub fn draw_channel_seeded<T: Real>(cov: &CovarianceMatrix<T>, seed: u64) -> CVector<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    draw_channel(cov, &mut rng)
}
