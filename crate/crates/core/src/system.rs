//! A clustered cell: user covariances, their groups and schedule evaluation.

use rand::Rng;

use crate::channel::CovarianceMatrix;
use crate::clustering::Clustering;
use crate::error::{Error, Result};
use crate::precoding::{approx_bd_precoders, group_centroid, outer_precoders, Approach, GroupCentroid, OuterPrecoderSet};
use crate::linalg::project;
use crate::scalar::{count, lit, Real};
use crate::sinr::{
    coupling, group_sinr, monte_carlo_sinr, sir, solve_fixed_point, solve_system, FixedPointOptions,
    FixedPointSolution, InterferenceSum, RateReport,
};

/// Everything needed to evaluate schedules for one drop of users.
#[derive(Debug, Clone)]
pub struct System<T: Real> {
    num_antennas: usize,
    covariances: Vec<CovarianceMatrix<T>>,
    clustering: Clustering,
    centroids: Vec<GroupCentroid<T>>,
    pub approach: Approach,
    pub interference_sum: InterferenceSum,
    pub fixed_point: FixedPointOptions<T>,
}

/// Outcome of serving one set of users simultaneously.
#[derive(Debug, Clone)]
pub struct Evaluation<T: Real> {
    /// Active group ids, ascending.
    pub groups: Vec<usize>,
    /// Scheduled users of each active group.
    pub members: Vec<Vec<usize>>,
    pub precoders: OuterPrecoderSet<T>,
    pub solution: FixedPointSolution<T>,
    pub report: RateReport<T>,
}

impl<T: Real> System<T> {
    pub fn new(covariances: Vec<CovarianceMatrix<T>>, clustering: Clustering, approach: Approach) -> Result<Self> {
        if covariances.len() != clustering.num_vertices() {
            return Err(Error::DimensionMismatch(format!(
                "{} covariances for a {}-user clustering",
                covariances.len(),
                clustering.num_vertices()
            )));
        }
        let num_antennas = covariances.first().map_or(0, |c| c.dim());
        let centroids = clustering
            .clusters()
            .iter()
            .map(|members| {
                let covs: Vec<&CovarianceMatrix<T>> = members.iter().map(|&u| &covariances[u]).collect();
                group_centroid(&covs, members.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            num_antennas,
            covariances,
            clustering,
            centroids,
            approach,
            interference_sum: InterferenceSum::default(),
            fixed_point: FixedPointOptions::default(),
        })
    }

    pub fn num_users(&self) -> usize {
        self.covariances.len()
    }

    pub fn num_groups(&self) -> usize {
        self.centroids.len()
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn group_of(&self, user: usize) -> usize {
        self.clustering.cluster_of(user)
    }

    pub fn group_size(&self, group: usize) -> usize {
        self.centroids[group].member_ids.len()
    }

    pub fn clustering(&self) -> &Clustering {
        &self.clustering
    }

    pub fn centroids(&self) -> &[GroupCentroid<T>] {
        &self.centroids
    }

    pub fn covariances(&self) -> &[CovarianceMatrix<T>] {
        &self.covariances
    }

    fn split(&self, users: &[usize]) -> Result<(Vec<usize>, Vec<Vec<usize>>)> {
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); self.num_groups()];
        for &u in users {
            if u >= self.num_users() {
                return Err(Error::InvalidArgument(format!("user {u} out of range")));
            }
            members[self.group_of(u)].push(u);
        }
        let groups: Vec<usize> = (0..self.num_groups()).filter(|&g| !members[g].is_empty()).collect();
        let members = groups
            .iter()
            .map(|&g| {
                let mut m = std::mem::take(&mut members[g]);
                m.sort_unstable();
                m.dedup();
                m
            })
            .collect();
        Ok((groups, members))
    }

    /// Deterministic-equivalent rates when `users` are served together.
    ///
    /// A group whose projected covariance has no more nonzero modes than it
    /// has streams collapses to zero SINR in the large-system limit. Such
    /// groups are left unserved and the rest is re-evaluated without them, so
    /// their users report rate 0 and `scheduled = false`.
    pub fn evaluate(&self, users: &[usize], power: T) -> Result<Evaluation<T>> {
        let mut served = users.to_vec();
        loop {
            let (groups, members) = self.split(&served)?;
            let streams: Vec<usize> = members.iter().map(Vec::len).collect();
            let active: Vec<&GroupCentroid<T>> = groups.iter().map(|&g| &self.centroids[g]).collect();
            let report = RateReport::empty(self.num_users());
            if groups.is_empty() {
                let precoders = OuterPrecoderSet { approach: self.approach, precoders: Vec::new(), inclusion_factor: None };
                let solution = FixedPointSolution { groups: Vec::new(), coupling: nalgebra::DMatrix::zeros(0, 0) };
                return Ok(Evaluation { groups, members, precoders, solution, report });
            }
            let precoders = outer_precoders(self.approach, &active, &streams, self.num_antennas)?;
            let covs: Vec<_> = active.iter().map(|c| c.covariance.entries()).collect();
            match solve_system(&precoders, &covs, &streams, self.fixed_point) {
                Ok(solution) => {
                    let mut eval = Evaluation { groups, members, precoders, solution, report };
                    eval.report = self.report_at(&eval, power);
                    return Ok(eval);
                }
                Err(e @ Error::DegenerateFixedPoint { .. }) => {
                    let dropped: Vec<usize> = (0..groups.len())
                        .filter(|&i| {
                            let r = project(covs[i], &precoders.precoders[i]);
                            matches!(solve_fixed_point(&r, streams[i], self.fixed_point), Err(Error::DegenerateFixedPoint { .. }))
                        })
                        .map(|i| groups[i])
                        .collect();
                    if dropped.is_empty() {
                        return Err(e);
                    }
                    served.retain(|&u| !dropped.contains(&self.group_of(u)));
                }
                Err(e) => return Err(e),
            }
        }
    }

    /// Rates of an existing evaluation at another transmit power. Precoders
    /// and fixed points do not depend on the power.
    pub fn report_at(&self, eval: &Evaluation<T>, power: T) -> RateReport<T> {
        let mut report = RateReport::empty(self.num_users());
        let streams: Vec<usize> = eval.members.iter().map(Vec::len).collect();
        let sinr = group_sinr(&eval.solution, &streams, power, self.interference_sum);
        let on = vec![true; streams.len()];
        for (i, users) in eval.members.iter().enumerate() {
            let s = sir(&eval.solution, &on, i);
            for &u in users {
                report.set(u, sinr[i], s);
            }
        }
        report
    }

    /// Rates from a finite number of channel draws, using the precoders of a
    /// prior deterministic evaluation. Returns the per-draw average rate per
    /// user; users outside the evaluation get 0.
    pub fn sample_rates<R: Rng + ?Sized>(&self, eval: &Evaluation<T>, power: T, draws: usize, rng: &mut R) -> Result<Vec<T>> {
        let mc = monte_carlo_sinr(&eval.members, &eval.precoders, &self.covariances, power, draws, rng)?;
        let mut rates = vec![T::zero(); self.num_users()];
        for (&u, &r) in mc.users.iter().zip(&mc.mean_rate) {
            rates[u] = r;
        }
        Ok(rates)
    }

    /// Group-level normalized interference `E[(g', g)] = ζ̄_{g'}²Ῡ_{g,g'}/ζ̄_g²`
    /// with every group carrying all of its users.
    ///
    /// `neighbours[g]` lists the groups whose strong modes group `g` nulls
    /// under approximate block diagonalization; it is ignored for matched
    /// precoding.
    ///
    /// A group that cannot carry all of its users under its precoder has an
    /// infinite weight from every other group and sends weight 0, so the
    /// scheduler separates it from everyone.
    pub fn normalized_interference(&self, neighbours: &[Vec<usize>]) -> Result<nalgebra::DMatrix<T>> {
        let n = self.num_groups();
        if neighbours.len() != n {
            return Err(Error::DimensionMismatch(format!("{} neighbour lists for {n} groups", neighbours.len())));
        }
        let sizes: Vec<usize> = (0..n).map(|g| self.group_size(g)).collect();
        let precoders: Vec<_> = match self.approach {
            Approach::Matched => self.centroids.iter().map(|c| c.eigenbasis().clone()).collect(),
            Approach::ApproxBd => (0..n)
                .map(|g| {
                    let mut set: Vec<usize> = neighbours[g].iter().copied().filter(|&h| h != g).collect();
                    set.push(g);
                    set.sort_unstable();
                    set.dedup();
                    let active: Vec<_> = set.iter().map(|&h| &self.centroids[h]).collect();
                    let streams: Vec<usize> = set.iter().map(|&h| sizes[h]).collect();
                    let pos = set.iter().position(|&h| h == g).expect("group in own active set");
                    approx_bd_precoders(&active, &streams, self.num_antennas)
                        .map(|mut s| s.precoders.swap_remove(pos))
                })
                .collect::<Result<Vec<_>>>()?,
        };
        let points = (0..n)
            .map(|g| {
                match solve_fixed_point(&project(self.centroids[g].covariance.entries(), &precoders[g]), sizes[g], self.fixed_point) {
                    Ok(p) => Ok(Some(p)),
                    Err(Error::DegenerateFixedPoint { .. }) => Ok(None),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let mut e = nalgebra::DMatrix::zeros(n, n);
        for target in 0..n {
            for source in 0..n {
                if source == target {
                    continue;
                }
                e[(source, target)] = match (&points[source], &points[target]) {
                    (_, None) => lit(f64::INFINITY),
                    (None, Some(_)) => T::zero(),
                    (Some(src), Some(tgt)) => {
                        let ups = coupling(src, &precoders[source], self.centroids[target].covariance.entries())?;
                        src.zeta_bar_sq() * ups / tgt.zeta_bar_sq()
                    }
                };
            }
        }
        Ok(e)
    }

    /// Per-user share of a group-level interference weight.
    pub fn edge_scale(&self, source_group: usize) -> T {
        match self.interference_sum {
            InterferenceSum::PerGroup => T::one() / count::<T>(self.group_size(source_group)),
            InterferenceSum::PerUser => T::one(),
        }
    }
}
