//! Deterministic-equivalent SINR and its Monte-Carlo reference.

use nalgebra::{Complex, DMatrix};
use rand::Rng;

use crate::channel::{draw_channel, CovarianceMatrix};
use crate::error::{Error, Result};
use crate::linalg::{eigh_desc, hermitian_asymmetry, project, trace_re};
use crate::precoding::{zf_inner, OuterPrecoderSet};
use crate::scalar::{count, lit, to_f64, CMatrix, Real};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 500;
/// Smallest admissible coupling denominator.
pub const COUPLING_FLOOR: f64 = 1e-12;

/// How the interference term sums over the streams of another group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterferenceSum {
    /// One `ζ̄²Ῡ` term per interfering group. `Ῡ` already carries the
    /// stream count of its source.
    #[default]
    PerGroup,
    /// One term per scheduled user of the interfering group.
    PerUser,
}

impl InterferenceSum {
    pub fn as_str(self) -> &'static str {
        match self {
            InterferenceSum::PerGroup => "per_group",
            InterferenceSum::PerUser => "per_user",
        }
    }
}

impl std::str::FromStr for InterferenceSum {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_group" => Ok(InterferenceSum::PerGroup),
            "per_user" => Ok(InterferenceSum::PerUser),
            other => Err(Error::InvalidArgument(format!("unknown interference_sum `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions<T: Real> {
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for FixedPointOptions<T> {
    fn default() -> Self {
        Self { tol: lit(DEFAULT_TOLERANCE), max_iter: DEFAULT_MAX_ITER }
    }
}

/// Converged state of one group's fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupFixedPoint<T: Real> {
    pub m_bar: T,
    /// `T_g = ((S/b) R̄ / m̄ + I)⁻¹`.
    pub t: CMatrix<T>,
    /// Projected covariance `R̄_g = B_gᴴ R_g B_g`.
    pub r_bar: CMatrix<T>,
    pub streams: usize,
    pub iterations: usize,
}

impl<T: Real> GroupFixedPoint<T> {
    pub fn dim(&self) -> usize {
        self.r_bar.nrows()
    }

    /// `ζ̄² = m̄ · b`.
    pub fn zeta_bar_sq(&self) -> T {
        self.m_bar * count::<T>(self.dim())
    }

    /// `|m̄ − Tr(R̄T)/b|`.
    pub fn residual(&self) -> T {
        (self.m_bar - trace_re(&(&self.r_bar * &self.t)) / count::<T>(self.dim())).abs()
    }
}

/// Solves `m̄ = Tr(R̄ T)/b`, `T = ((S/b) R̄/m̄ + I)⁻¹`.
///
/// The scalar equation is solved on the eigenvalues of `R̄`, where both
/// updates are diagonal; `T` is assembled once at the end.
pub fn solve_fixed_point<T: Real>(
    r_bar: &CMatrix<T>,
    streams: usize,
    options: FixedPointOptions<T>,
) -> Result<GroupFixedPoint<T>> {
    let b = r_bar.nrows();
    if r_bar.ncols() != b || b == 0 {
        return Err(Error::DimensionMismatch(format!("{}x{} projected covariance", b, r_bar.ncols())));
    }
    if streams == 0 || streams > b {
        return Err(Error::InvalidArgument(format!("{streams} streams on a {b}-dimensional space")));
    }
    let scale = r_bar.iter().fold(T::zero(), |a, z| a.max(z.norm_sqr().sqrt()));
    if hermitian_asymmetry(r_bar) > lit::<T>(1e-8) * scale.max(T::one()) {
        return Err(Error::NotHermitian { asymmetry: to_f64(hermitian_asymmetry(r_bar)) });
    }
    let (lambda, v) = eigh_desc(r_bar);
    let lambda: Vec<T> = lambda.into_iter().map(|l| l.max(T::zero())).collect();
    let top = lambda[0];
    let rank = lambda.iter().filter(|&&l| l > top * lit(1e-12)).count();
    if !(top > T::zero()) || rank <= streams {
        return Err(Error::DegenerateFixedPoint { streams, rank: if top > T::zero() { rank } else { 0 } });
    }
    let bt = count::<T>(b);
    let load = count::<T>(streams) / bt;
    let update = |m: T| lambda.iter().fold(T::zero(), |a, &l| a + l / (load * l / m + T::one())) / bt;

    let slope = |m: T| {
        lambda.iter().fold(T::zero(), |a, &l| {
            let d = load * l + m;
            a + load * l * l / (d * d)
        }) / bt
    };

    // h(m) = m - update(m) is convex with a single positive root below
    // tr(R̄)/b, so Newton from the right converges monotonically; bisection
    // guards against round-off.
    let mut lo = T::zero();
    let mut hi = lambda.iter().fold(T::zero(), |a, &l| a + l) / bt;
    let mut m = hi;
    let mut iterations = 0;
    loop {
        if iterations >= options.max_iter {
            return Err(Error::NonConvergence { iterations, last_change: to_f64((hi - lo) / m) });
        }
        iterations += 1;
        let h = m - update(m);
        if h == T::zero() {
            break;
        }
        if h > T::zero() {
            hi = m;
        } else {
            lo = m;
        }
        let d = T::one() - slope(m);
        let newton = m - h / d;
        let next = if d > T::zero() && newton >= lo && newton <= hi { newton } else { (lo + hi) * lit(0.5) };
        let change = (next - m).abs() / next;
        m = next;
        if !(m > T::zero()) {
            return Err(Error::DegenerateFixedPoint { streams, rank });
        }
        if change < options.tol {
            break;
        }
    }
    let diag: Vec<T> = lambda.iter().map(|&l| T::one() / (load * l / m + T::one())).collect();
    let t = CMatrix::from_fn(b, b, |i, j| {
        (0..b).fold(Complex::new(T::zero(), T::zero()), |acc, k| {
            acc + v[(i, k)] * v[(j, k)].conj() * Complex::new(diag[k], T::zero())
        })
    });
    Ok(GroupFixedPoint { m_bar: m, t, r_bar: r_bar.clone(), streams, iterations })
}

/// Normalized interference `Ῡ_{g,g'}` leaked by source group `g'` (with outer
/// precoder `b_source`) onto a target whose covariance is `r_target`.
pub fn coupling<T: Real>(source: &GroupFixedPoint<T>, b_source: &CMatrix<T>, r_target: &CMatrix<T>) -> Result<T> {
    let b = count::<T>(source.dim());
    let m2 = source.m_bar * source.m_bar;
    let load = count::<T>(source.streams) / b;
    let rt = &source.r_bar * &source.t;
    let leak = project(r_target, b_source);
    // Nonnegative in exact arithmetic; nulled directions can round below 0.
    let numerator = (trace_re(&(&rt * &leak * &source.t)) / b).max(T::zero());
    let denominator = T::one() - load * trace_re(&(&rt * &rt)) / (b * m2);
    if !(denominator > lit(COUPLING_FLOOR)) {
        return Err(Error::CouplingBreakdown { source_group: usize::MAX, denominator: to_f64(denominator) });
    }
    Ok(load * (numerator / denominator) / m2)
}

/// Fixed points of every active group plus the coupling matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointSolution<T: Real> {
    pub groups: Vec<GroupFixedPoint<T>>,
    /// `coupling[(g, g')] = Ῡ_{g,g'}`, zero diagonal.
    pub coupling: DMatrix<T>,
}

impl<T: Real> FixedPointSolution<T> {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn zeta_bar_sq(&self, g: usize) -> T {
        self.groups[g].zeta_bar_sq()
    }

    /// Interference `ζ̄_{g'}² Ῡ_{g,g'}` from `source` onto `target`.
    pub fn leakage(&self, source: usize, target: usize) -> T {
        if source == target {
            T::zero()
        } else {
            self.zeta_bar_sq(source) * self.coupling[(target, source)]
        }
    }
}

/// Solves the fixed point of every group and assembles `Ῡ`. `covariances`
/// and `streams` are index-aligned with the precoder set.
pub fn solve_system<T: Real>(
    precoders: &OuterPrecoderSet<T>,
    covariances: &[&CMatrix<T>],
    streams: &[usize],
    options: FixedPointOptions<T>,
) -> Result<FixedPointSolution<T>> {
    let g = precoders.len();
    if covariances.len() != g || streams.len() != g {
        return Err(Error::DimensionMismatch(format!(
            "{g} precoders, {} covariances, {} stream counts",
            covariances.len(),
            streams.len()
        )));
    }
    let groups = precoders
        .precoders
        .iter()
        .zip(covariances)
        .zip(streams)
        .map(|((b, r), &s)| solve_fixed_point(&project(r, b), s, options))
        .collect::<Result<Vec<_>>>()?;
    let mut matrix = DMatrix::zeros(g, g);
    for target in 0..g {
        for source in 0..g {
            if source != target {
                matrix[(target, source)] = coupling(&groups[source], &precoders.precoders[source], covariances[target])
                    .map_err(|e| match e {
                        Error::CouplingBreakdown { denominator, .. } => {
                            Error::CouplingBreakdown { source_group: source, denominator }
                        }
                        other => other,
                    })?;
            }
        }
    }
    Ok(FixedPointSolution { groups, coupling: matrix })
}

/// Deterministic SINR of each group, every scheduled user of a group sharing
/// its value. `streams[g]` is the number of scheduled users of group `g`;
/// groups with zero streams are inactive and get SINR 0.
pub fn group_sinr<T: Real>(solution: &FixedPointSolution<T>, streams: &[usize], power: T, mode: InterferenceSum) -> Vec<T> {
    let total: usize = streams.iter().sum();
    if total == 0 || !(power > T::zero()) {
        return vec![T::zero(); streams.len()];
    }
    let per_stream = power / count::<T>(total);
    (0..streams.len())
        .map(|g| {
            if streams[g] == 0 {
                return T::zero();
            }
            let interference = (0..streams.len())
                .filter(|&h| h != g && streams[h] > 0)
                .fold(T::zero(), |acc, h| {
                    let mult = match mode {
                        InterferenceSum::PerGroup => T::one(),
                        InterferenceSum::PerUser => count::<T>(streams[h]),
                    };
                    acc + mult * solution.leakage(h, g)
                });
            per_stream * solution.zeta_bar_sq(g) / (per_stream * interference + T::one())
        })
        .collect()
}

/// Noise-free deterministic SIR of group `g` against the other active groups.
pub fn sir<T: Real>(solution: &FixedPointSolution<T>, active: &[bool], g: usize) -> T {
    let interference = (0..solution.len())
        .filter(|&h| h != g && active[h])
        .fold(T::zero(), |acc, h| acc + solution.leakage(h, g));
    if interference > T::zero() {
        solution.zeta_bar_sq(g) / interference
    } else {
        lit(f64::INFINITY)
    }
}

/// `log2(1 + sinr)`.
pub fn rate<T: Real>(sinr: T) -> T {
    (T::one() + sinr).log2()
}

/// Per-user SINR, SIR and rate. Unscheduled users carry zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport<T: Real> {
    pub sinr: Vec<T>,
    pub sir: Vec<T>,
    pub rate: Vec<T>,
    pub scheduled: Vec<bool>,
}

impl<T: Real> RateReport<T> {
    pub fn empty(num_users: usize) -> Self {
        Self {
            sinr: vec![T::zero(); num_users],
            sir: vec![T::zero(); num_users],
            rate: vec![T::zero(); num_users],
            scheduled: vec![false; num_users],
        }
    }

    pub fn set(&mut self, user: usize, sinr: T, sir: T) {
        self.sinr[user] = sinr;
        self.sir[user] = sir;
        self.rate[user] = rate(sinr);
        self.scheduled[user] = true;
    }

    pub fn sum_rate(&self) -> T {
        self.rate.iter().fold(T::zero(), |a, &r| a + r)
    }
}

/// Empirical per-user statistics from finite channel draws.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport<T: Real> {
    /// User ids in schedule order (group by group).
    pub users: Vec<usize>,
    /// Average of the per-draw SINR.
    pub mean_sinr: Vec<T>,
    /// Average received signal power.
    pub signal_power: Vec<T>,
    /// Average intra- plus inter-group interference power, noise excluded.
    pub interference_power: Vec<T>,
    /// Average of the per-draw rate.
    pub mean_rate: Vec<T>,
}

impl<T: Real> MonteCarloReport<T> {
    /// `E[signal] / (E[interference] + 1)`.
    pub fn ratio_of_means(&self) -> Vec<T> {
        self.signal_power
            .iter()
            .zip(&self.interference_power)
            .map(|(&s, &i)| s / (i + T::one()))
            .collect()
    }
}

/// Draws Rayleigh channels for the scheduled users, applies zero-forcing
/// inner precoders on the effective channels and measures exact SINR.
///
/// `members[g]` lists the scheduled users of the group whose outer precoder
/// is `precoders.precoders[g]`; `covariances` is indexed by user id.
pub fn monte_carlo_sinr<T: Real, R: Rng + ?Sized>(
    members: &[Vec<usize>],
    precoders: &OuterPrecoderSet<T>,
    covariances: &[CovarianceMatrix<T>],
    power: T,
    draws: usize,
    rng: &mut R,
) -> Result<MonteCarloReport<T>> {
    if members.len() != precoders.len() {
        return Err(Error::DimensionMismatch(format!("{} groups, {} precoders", members.len(), precoders.len())));
    }
    if draws == 0 {
        return Err(Error::InvalidArgument("monte_carlo_sinr needs at least one draw".into()));
    }
    let users: Vec<usize> = members.iter().flatten().copied().collect();
    let total = users.len();
    let per_stream = if total > 0 { power / count::<T>(total) } else { T::zero() };
    let mut signal = vec![T::zero(); total];
    let mut interference = vec![T::zero(); total];
    let mut sinr = vec![T::zero(); total];
    let mut rates = vec![T::zero(); total];
    for _ in 0..draws {
        let channels: Vec<Vec<_>> = members
            .iter()
            .map(|g| g.iter().map(|&u| draw_channel(&covariances[u], rng)).collect())
            .collect();
        let mut beams = Vec::with_capacity(members.len());
        for (g, hs) in channels.iter().enumerate() {
            if hs.is_empty() {
                beams.push(CMatrix::<T>::zeros(covariances.first().map_or(0, |c| c.dim()), 0));
                continue;
            }
            let b = &precoders.precoders[g];
            let h = CMatrix::from_columns(hs);
            let inner = zf_inner(&(b.adjoint() * &h), b)?;
            beams.push(b * inner.p);
        }
        let mut idx = 0;
        for (g, hs) in channels.iter().enumerate() {
            for (k, h) in hs.iter().enumerate() {
                let mut sig = T::zero();
                let mut int = T::zero();
                for (gp, v) in beams.iter().enumerate() {
                    let gains = h.adjoint() * v;
                    for (j, z) in gains.iter().enumerate() {
                        let p = z.norm_sqr() * per_stream;
                        if gp == g && j == k {
                            sig += p;
                        } else {
                            int += p;
                        }
                    }
                }
                let s = sig / (int + T::one());
                signal[idx] += sig;
                interference[idx] += int;
                sinr[idx] += s;
                rates[idx] += rate(s);
                idx += 1;
            }
        }
    }
    let n = count::<T>(draws);
    let avg = |v: Vec<T>| v.into_iter().map(|x| x / n).collect::<Vec<_>>();
    Ok(MonteCarloReport {
        users,
        mean_sinr: avg(sinr),
        signal_power: avg(signal),
        interference_power: avg(interference),
        mean_rate: avg(rates),
    })
}
