//! Group centroids, outer precoders and the zero-forcing inner precoder.

use nalgebra::Complex;

use crate::channel::CovarianceMatrix;
use crate::error::{Error, Result};
use crate::linalg::{eigh_desc, orthogonal_complement, project};
use crate::scalar::{count, lit, CMatrix, Real};

/// Relative singular-value threshold used for null-space rank decisions.
pub const NULL_SPACE_TOL: f64 = 1e-9;

/// Outer precoder design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Approach {
    /// Approximate block diagonalization: null the strongest modes of the
    /// other active groups, then match the remaining space.
    ApproxBd,
    /// `B_g = U_g`, independent of the other groups.
    Matched,
}

impl Approach {
    pub fn as_str(self) -> &'static str {
        match self {
            Approach::ApproxBd => "approx_bd",
            Approach::Matched => "matched",
        }
    }
}

impl std::str::FromStr for Approach {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "approx_bd" | "approxbd" | "bd" => Ok(Approach::ApproxBd),
            "matched" => Ok(Approach::Matched),
            other => Err(Error::InvalidArgument(format!("unknown precoder approach `{other}`"))),
        }
    }
}

impl std::fmt::Display for Approach {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Mean covariance of a user group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupCentroid<T: Real> {
    pub covariance: CovarianceMatrix<T>,
    pub member_ids: Vec<usize>,
}

impl<T: Real> GroupCentroid<T> {
    pub fn eigenbasis(&self) -> &CMatrix<T> {
        self.covariance.eigenvectors()
    }

    pub fn eigenvalues(&self) -> &[T] {
        self.covariance.eigenvalues()
    }

    pub fn rank(&self) -> usize {
        self.covariance.effective_rank()
    }

    pub fn dim(&self) -> usize {
        self.covariance.dim()
    }
}

/// Arithmetic mean of the member covariances, decomposed with the energy
/// fraction of the first member.
pub fn group_centroid<T: Real>(members: &[&CovarianceMatrix<T>], member_ids: Vec<usize>) -> Result<GroupCentroid<T>> {
    let first = members
        .first()
        .ok_or_else(|| Error::InvalidArgument("group centroid of an empty group".into()))?;
    let n = first.dim();
    let mut acc = CMatrix::<T>::zeros(n, n);
    for m in members {
        if m.dim() != n {
            return Err(Error::DimensionMismatch(format!("member of dimension {} in a {n}-antenna group", m.dim())));
        }
        acc += m.entries();
    }
    let inv = Complex::new(T::one() / count::<T>(members.len()), T::zero());
    let covariance = CovarianceMatrix::from_entries(acc.map(|z| z * inv), first.energy_fraction())?;
    Ok(GroupCentroid { covariance, member_ids })
}

/// Largest `c ≥ 1` with `N_t ≥ Σ min(r_g, c·S_g)`, capped where the sum
/// saturates.
pub fn inclusion_factor(ranks: &[usize], streams: &[usize], num_antennas: usize) -> Result<usize> {
    if ranks.len() != streams.len() {
        return Err(Error::DimensionMismatch(format!("{} ranks for {} groups", ranks.len(), streams.len())));
    }
    if streams.contains(&0) {
        return Err(Error::InvalidArgument("active groups need at least one stream".into()));
    }
    let total: usize = streams.iter().sum();
    if total > num_antennas {
        return Err(Error::Infeasible(format!("{total} streams exceed {num_antennas} antennas")));
    }
    let load = |c: usize| -> usize { ranks.iter().zip(streams).map(|(&r, &s)| r.min(c * s)).sum() };
    if load(1) > num_antennas {
        return Err(Error::Infeasible("no inclusion factor fits the antenna budget".into()));
    }
    let cap = ranks
        .iter()
        .zip(streams)
        .map(|(&r, &s)| r.div_ceil(s))
        .max()
        .unwrap_or(1)
        .max(1);
    let mut c = 1;
    while c < cap && load(c + 1) <= num_antennas {
        c += 1;
    }
    Ok(c)
}

/// Outer precoders for a set of active groups, index-aligned with the input.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterPrecoderSet<T: Real> {
    pub approach: Approach,
    pub precoders: Vec<CMatrix<T>>,
    /// Only set for [`Approach::ApproxBd`].
    pub inclusion_factor: Option<usize>,
}

impl<T: Real> OuterPrecoderSet<T> {
    pub fn dims(&self) -> Vec<usize> {
        self.precoders.iter().map(|b| b.ncols()).collect()
    }

    pub fn len(&self) -> usize {
        self.precoders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.precoders.is_empty()
    }
}

/// Approximate block-diagonalization outer precoders.
pub fn approx_bd_precoders<T: Real>(
    active: &[&GroupCentroid<T>],
    streams: &[usize],
    num_antennas: usize,
) -> Result<OuterPrecoderSet<T>> {
    if active.is_empty() {
        return Err(Error::InvalidArgument("no active groups".into()));
    }
    if active.iter().any(|g| g.dim() != num_antennas) {
        return Err(Error::DimensionMismatch("centroid dimension differs from N_t".into()));
    }
    let ranks: Vec<usize> = active.iter().map(|g| g.rank()).collect();
    let c = inclusion_factor(&ranks, streams, num_antennas)?;
    let included: Vec<usize> = ranks.iter().zip(streams).map(|(&r, &s)| r.min(c * s)).collect();
    let total_included: usize = included.iter().sum();
    let mut precoders = Vec::with_capacity(active.len());
    for (g, centroid) in active.iter().enumerate() {
        let others = total_included - included[g];
        if others >= num_antennas {
            return Err(Error::DimensionalityBottleneck { group: g, dim: 0, streams: streams[g] });
        }
        let xi = CMatrix::from_fn(num_antennas, others, |row, col| {
            let mut col = col;
            for (h, &r) in included.iter().enumerate() {
                if h == g {
                    continue;
                }
                if col < r {
                    return active[h].eigenbasis()[(row, col)];
                }
                col -= r;
            }
            unreachable!("column index within stacked interference basis")
        });
        let e0 = orthogonal_complement(&xi, lit(NULL_SPACE_TOL));
        let projected = project(centroid.covariance.entries(), &e0);
        let (_, g1) = eigh_desc(&projected);
        let b = ranks[g].min(num_antennas - others).min(e0.ncols());
        if b < streams[g] {
            return Err(Error::DimensionalityBottleneck { group: g, dim: b, streams: streams[g] });
        }
        precoders.push(&e0 * g1.columns(0, b));
    }
    Ok(OuterPrecoderSet { approach: Approach::ApproxBd, precoders, inclusion_factor: Some(c) })
}

/// Matched outer precoders `B_g = U_g`.
pub fn matched_precoders<T: Real>(active: &[&GroupCentroid<T>]) -> OuterPrecoderSet<T> {
    OuterPrecoderSet {
        approach: Approach::Matched,
        precoders: active.iter().map(|g| g.eigenbasis().clone()).collect(),
        inclusion_factor: None,
    }
}

/// Builds either design.
pub fn outer_precoders<T: Real>(
    approach: Approach,
    active: &[&GroupCentroid<T>],
    streams: &[usize],
    num_antennas: usize,
) -> Result<OuterPrecoderSet<T>> {
    match approach {
        Approach::ApproxBd => approx_bd_precoders(active, streams, num_antennas),
        Approach::Matched => Ok(matched_precoders(active)),
    }
}

/// Zero-forcing inner precoder on the effective channel `H̃ = BᴴH`.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerPrecoder<T: Real> {
    /// `b × S` precoding matrix, already scaled by `ζ`.
    pub p: CMatrix<T>,
    pub zeta_sq: T,
}

/// `P = ζ H̃ (H̃ᴴH̃)⁻¹` with `ζ² = S / Tr(B H̃ (H̃ᴴH̃)⁻² H̃ᴴ Bᴴ)`.
pub fn zf_inner<T: Real>(h_eff: &CMatrix<T>, b: &CMatrix<T>) -> Result<InnerPrecoder<T>> {
    if b.ncols() != h_eff.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "effective channel has {} rows, outer precoder {} columns",
            h_eff.nrows(),
            b.ncols()
        )));
    }
    let s = h_eff.ncols();
    if s == 0 || s > h_eff.nrows() {
        return Err(Error::SingularChannel);
    }
    let gram = h_eff.adjoint() * h_eff;
    let (eigs, _) = eigh_desc(&gram);
    let top = eigs[0];
    if !(top > T::zero()) || eigs[s - 1] <= top * lit(1e-13) {
        return Err(Error::SingularChannel);
    }
    let inv = gram.cholesky().ok_or(Error::SingularChannel)?.inverse();
    let p0 = h_eff * inv;
    let bp = b * &p0;
    let energy = bp.iter().fold(T::zero(), |a, z| a + z.norm_sqr());
    let zeta_sq = count::<T>(s) / energy;
    let zeta = Complex::new(zeta_sq.sqrt(), T::zero());
    Ok(InnerPrecoder { p: p0.map(|z| z * zeta), zeta_sq })
}
