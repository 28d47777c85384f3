//! Correlation clustering of users from pairwise covariance similarity.
//!
//! The signed advice graph marks pairs as "together" (+) or "apart" (−). The
//! LP relaxation of disagreement minimization is rounded by randomized
//! pivoting; KwikCluster on the signed graph is used when the LP is too big.

use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOutcome};
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::similarity::SimilarityMatrix;

/// Lower knee of the positive-edge rounding function.
pub const PIVOT_A: f64 = 0.19;
/// Upper knee of the positive-edge rounding function.
pub const PIVOT_B: f64 = 0.5095;
pub const DEFAULT_LP_SIZE_CAP: usize = 40;
pub const DEFAULT_REPETITIONS: usize = 10;
/// Largest graph accepted by [`exact_clustering`].
pub const EXACT_SIZE_CAP: usize = 12;

/// Complete signed graph. Only the strict upper triangle is stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdviceGraph {
    n: usize,
    positive: Vec<bool>,
}

impl AdviceGraph {
    /// Builds a graph from a sign oracle evaluated on `u < v`.
    pub fn from_fn(n: usize, mut positive: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = vec![false; n * n];
        for u in 0..n {
            for v in (u + 1)..n {
                let p = positive(u, v);
                bits[u * n + v] = p;
                bits[v * n + u] = p;
            }
        }
        Self { n, positive: bits }
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn is_positive(&self, u: usize, v: usize) -> bool {
        u != v && self.positive[u * self.n + v]
    }

    /// `+1`, `−1`, or `0` on the diagonal.
    pub fn sign(&self, u: usize, v: usize) -> i8 {
        if u == v {
            0
        } else if self.is_positive(u, v) {
            1
        } else {
            -1
        }
    }

    pub fn num_edges(&self) -> usize {
        self.n * self.n.saturating_sub(1) / 2
    }

    pub fn num_positive(&self) -> usize {
        self.positive.iter().filter(|&&p| p).count() / 2
    }
}

/// `+1` where `s_ij > dol_th` (strictly), `−1` otherwise.
pub fn build_advice_graph<T: Real>(s: &SimilarityMatrix<T>, dol_th: T) -> Result<AdviceGraph> {
    if !(dol_th > T::zero() && dol_th <= T::one()) {
        return Err(Error::InvalidArgument(format!("dol_th {dol_th} outside (0, 1]")));
    }
    Ok(AdviceGraph::from_fn(s.size(), |u, v| s.get(u, v) > dol_th))
}

/// Symmetric fractional "distance" between vertices from the LP relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalAssignment {
    n: usize,
    x: Vec<f64>,
}

impl FractionalAssignment {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut x = vec![0.0; n * n];
        for u in 0..n {
            for v in (u + 1)..n {
                let val = f(u, v);
                x[u * n + v] = val;
                x[v * n + u] = val;
            }
        }
        Self { n, x }
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.x[u * self.n + v]
    }

    /// Largest violation of `x_uv + x_vw ≥ x_uw` over all triples.
    pub fn triangle_violation(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for u in 0..n {
            for v in 0..n {
                for w in 0..n {
                    if u != v && v != w && u != w {
                        worst = worst.max(self.get(u, w) - self.get(u, v) - self.get(v, w));
                    }
                }
            }
        }
        worst
    }
}

/// A partition of `0..n` into clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    assignment: Vec<usize>,
    clusters: Vec<Vec<usize>>,
}

impl Clustering {
    /// Builds a partition from per-vertex labels. Cluster ids are renumbered in
    /// order of first appearance.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut remap = std::collections::HashMap::new();
        let mut clusters: Vec<Vec<usize>> = Vec::new();
        let assignment = labels
            .iter()
            .enumerate()
            .map(|(v, &l)| {
                let id = *remap.entry(l).or_insert_with(|| {
                    clusters.push(Vec::new());
                    clusters.len() - 1
                });
                clusters[id].push(v);
                id
            })
            .collect();
        Self { assignment, clusters }
    }

    /// Builds a partition from explicit clusters; they must be disjoint and
    /// cover `0..n`.
    pub fn from_clusters(n: usize, clusters: Vec<Vec<usize>>) -> Result<Self> {
        let mut labels = vec![usize::MAX; n];
        for (c, members) in clusters.iter().enumerate() {
            for &v in members {
                if v >= n || labels[v] != usize::MAX {
                    return Err(Error::InvalidArgument(format!("vertex {v} repeated or out of range")));
                }
                labels[v] = c;
            }
        }
        if labels.contains(&usize::MAX) {
            return Err(Error::InvalidArgument("clusters do not cover every vertex".into()));
        }
        Ok(Self::from_labels(&labels))
    }

    pub fn singletons(n: usize) -> Self {
        Self::from_labels(&(0..n).collect::<Vec<_>>())
    }

    pub fn num_vertices(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn cluster_of(&self, v: usize) -> usize {
        self.assignment[v]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }
}

/// Negative edges inside clusters plus positive edges across clusters.
pub fn disagreement_cost(c: &Clustering, g: &AdviceGraph) -> usize {
    let n = g.num_vertices();
    let mut cost = 0;
    for u in 0..n {
        for v in (u + 1)..n {
            let same = c.cluster_of(u) == c.cluster_of(v);
            if same != g.is_positive(u, v) {
                cost += 1;
            }
        }
    }
    cost
}

fn pair_index(n: usize, u: usize, v: usize) -> usize {
    let (u, v) = if u < v { (u, v) } else { (v, u) };
    u * n - u * (u + 1) / 2 + (v - u - 1)
}

/// Solves the LP relaxation with triangle constraints. Returns the fractional
/// assignment and the optimal objective, a lower bound on any partition's
/// disagreement cost.
pub fn solve_cc_lp(g: &AdviceGraph, size_cap: usize) -> Result<(FractionalAssignment, f64)> {
    let n = g.num_vertices();
    if n > size_cap {
        return Err(Error::LpSizeCap { vertices: n, cap: size_cap });
    }
    if n < 2 {
        return Ok((FractionalAssignment::from_fn(n, |_, _| 0.0), 0.0));
    }
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let mut vars = Vec::with_capacity(n * (n - 1) / 2);
    let mut offset = 0.0;
    for u in 0..n {
        for v in (u + 1)..n {
            let coef = if g.is_positive(u, v) {
                1.0
            } else {
                offset += 1.0;
                -1.0
            };
            vars.push(lp.add_var(coef, (0.0, 1.0)));
        }
    }
    let var = |u, v| vars[pair_index(n, u, v)];
    for u in 0..n {
        for v in (u + 1)..n {
            for w in (v + 1)..n {
                let (uv, vw, uw) = (var(u, v), var(v, w), var(u, w));
                lp.add_constraint(&[(uv, 1.0), (vw, 1.0), (uw, -1.0)], ComparisonOp::Ge, 0.0);
                lp.add_constraint(&[(uv, 1.0), (uw, 1.0), (vw, -1.0)], ComparisonOp::Ge, 0.0);
                lp.add_constraint(&[(uw, 1.0), (vw, 1.0), (uv, -1.0)], ComparisonOp::Ge, 0.0);
            }
        }
    }
    let solution = match lp.solve() {
        Ok(SolveOutcome::Solution(s)) => s,
        Ok(other) => return Err(Error::LpSolver(format!("{other:?}"))),
        Err(e) => return Err(Error::LpSolver(e.to_string())),
    };
    let x = FractionalAssignment::from_fn(n, |u, v| solution[var(u, v)].clamp(0.0, 1.0));
    Ok((x, solution.objective() + offset))
}

/// Rounding function applied to LP values on positive edges.
pub fn f_plus(x: f64) -> f64 {
    if x < PIVOT_A {
        0.0
    } else if x >= PIVOT_B {
        1.0
    } else {
        ((x - PIVOT_A) / (PIVOT_B - PIVOT_A)).powi(2)
    }
}

/// Rounding function applied to LP values on negative edges.
pub fn f_minus(x: f64) -> f64 {
    x
}

fn pivot_loop<R: Rng + ?Sized>(n: usize, rng: &mut R, mut joins: impl FnMut(usize, usize, &mut R) -> bool) -> Clustering {
    let mut labels = vec![0; n];
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut next = 0;
    while !remaining.is_empty() {
        let w = remaining[rng.random_range(0..remaining.len())];
        let mut rest = Vec::with_capacity(remaining.len());
        for &u in &remaining {
            if u == w || joins(w, u, rng) {
                labels[u] = next;
            } else {
                rest.push(u);
            }
        }
        remaining = rest;
        next += 1;
    }
    Clustering::from_labels(&labels)
}

/// Randomized pivot rounding of an LP solution.
pub fn round_pivot<R: Rng + ?Sized>(x: &FractionalAssignment, g: &AdviceGraph, rng: &mut R) -> Clustering {
    pivot_loop(g.num_vertices(), rng, |w, u, rng| {
        let p = if g.is_positive(w, u) { f_plus(x.get(w, u)) } else { f_minus(x.get(w, u)) };
        let keep = 1.0 - p;
        keep >= 1.0 || (keep > 0.0 && rng.random::<f64>() < keep)
    })
}

/// KwikCluster: pivot on the signed graph, pulling in positive neighbours.
pub fn kwik_cluster<R: Rng + ?Sized>(g: &AdviceGraph, rng: &mut R) -> Clustering {
    pivot_loop(g.num_vertices(), rng, |w, u, _| g.is_positive(w, u))
}

/// Minimum-disagreement partition by enumerating all set partitions.
pub fn exact_clustering(g: &AdviceGraph) -> Result<(Clustering, usize)> {
    let n = g.num_vertices();
    if n > EXACT_SIZE_CAP {
        return Err(Error::EnumerationCap { size: n, cap: EXACT_SIZE_CAP });
    }
    if n == 0 {
        return Ok((Clustering::from_labels(&[]), 0));
    }
    // Restricted growth strings enumerate each partition exactly once.
    let mut labels = vec![0usize; n];
    let mut best = (labels.clone(), usize::MAX);
    loop {
        let c = Clustering::from_labels(&labels);
        let cost = disagreement_cost(&c, g);
        if cost < best.1 {
            best = (labels.clone(), cost);
        }
        let mut i = n - 1;
        loop {
            if i == 0 {
                let c = Clustering::from_labels(&best.0);
                return Ok((c, best.1));
            }
            let max_prefix = labels[..i].iter().copied().max().unwrap_or(0);
            if labels[i] <= max_prefix {
                labels[i] += 1;
                labels[i + 1..].iter_mut().for_each(|l| *l = 0);
                break;
            }
            i -= 1;
        }
    }
}

/// Settings for [`cluster_users`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusteringOptions {
    pub lp_size_cap: usize,
    /// Independent rounding runs; the lowest-cost partition is kept.
    pub repetitions: usize,
}

impl Default for ClusteringOptions {
    fn default() -> Self {
        Self { lp_size_cap: DEFAULT_LP_SIZE_CAP, repetitions: DEFAULT_REPETITIONS }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterOutcome {
    pub clustering: Clustering,
    pub cost: usize,
    /// `None` when the graph exceeded the LP cap and KwikCluster was used.
    pub lp_objective: Option<f64>,
}

/// Clusters users from a similarity matrix at threshold `dol_th`.
pub fn cluster_users<T: Real, R: Rng + ?Sized>(
    s: &SimilarityMatrix<T>,
    dol_th: T,
    options: ClusteringOptions,
    rng: &mut R,
) -> Result<ClusterOutcome> {
    let g = build_advice_graph(s, dol_th)?;
    cluster_graph(&g, options, rng)
}

pub fn cluster_graph<R: Rng + ?Sized>(g: &AdviceGraph, options: ClusteringOptions, rng: &mut R) -> Result<ClusterOutcome> {
    let reps = options.repetitions.max(1);
    let lp = if g.num_vertices() <= options.lp_size_cap {
        Some(solve_cc_lp(g, options.lp_size_cap)?)
    } else {
        None
    };
    let mut best: Option<(Clustering, usize)> = None;
    for _ in 0..reps {
        let c = match &lp {
            Some((x, _)) => round_pivot(x, g, rng),
            None => kwik_cluster(g, rng),
        };
        let cost = disagreement_cost(&c, g);
        if best.as_ref().is_none_or(|(_, b)| cost < *b) {
            best = Some((c, cost));
        }
    }
    let (clustering, cost) = best.expect("at least one repetition");
    Ok(ClusterOutcome { clustering, cost, lp_objective: lp.map(|(_, obj)| obj) })
}

/// Result of the descending threshold search.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSearch {
    pub threshold: f64,
    /// Every `(threshold, score)` pair evaluated, in order.
    pub trace: Vec<(f64, f64)>,
}

/// Lowers the clustering threshold from 1 in steps of `step` and stops at the
/// first score decrease, returning the threshold before it. The search never
/// goes below `step`.
pub fn adapt_threshold<E, F>(mut evaluator: F, step: f64) -> std::result::Result<ThresholdSearch, E>
where
    F: FnMut(f64) -> std::result::Result<f64, E>,
    E: From<Error>,
{
    if !(step > 0.0 && step <= 0.2) {
        return Err(Error::InvalidArgument(format!("threshold step {step} outside (0, 0.2]")).into());
    }
    let at = |i: usize| ((1.0 - i as f64 * step) * 1e12).round() / 1e12;
    let mut trace = vec![(1.0, evaluator(1.0)?)];
    let mut i = 0;
    loop {
        let next = at(i + 1);
        if next < step - 1e-12 {
            break;
        }
        let score = evaluator(next)?;
        trace.push((next, score));
        if score < trace[trace.len() - 2].1 {
            break;
        }
        i += 1;
    }
    Ok(ThresholdSearch { threshold: at(i), trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn uniform(n: usize, positive: bool) -> AdviceGraph {
        AdviceGraph::from_fn(n, |_, _| positive)
    }

    #[test]
    fn f_plus_pieces() {
        assert_eq!(f_plus(0.10), 0.0);
        assert_eq!(f_plus(0.60), 1.0);
        assert!((f_plus(0.35) - 0.2507).abs() < 1e-4);
        assert_eq!(f_minus(0.42), 0.42);
    }

    #[test]
    fn lp_on_uniform_graphs() {
        let (x, obj) = solve_cc_lp(&uniform(5, true), 40).unwrap();
        assert!(obj.abs() < 1e-9);
        assert!((0..5).all(|u| (0..5).all(|v| x.get(u, v).abs() < 1e-9)));
        let (x, obj) = solve_cc_lp(&uniform(5, false), 40).unwrap();
        assert!(obj.abs() < 1e-9);
        assert!((x.get(0, 4) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn frustrated_triangle_costs_one() {
        let g = AdviceGraph::from_fn(5, |u, v| !(u == 0 && v == 2));
        let (x, obj) = solve_cc_lp(&g, 40).unwrap();
        assert!(x.triangle_violation() < 1e-6);
        let (_, best) = exact_clustering(&g).unwrap();
        assert_eq!(best, 1);
        assert!(obj <= 1.0 + 1e-9);
    }

    #[test]
    fn size_cap_is_enforced() {
        assert_eq!(
            solve_cc_lp(&uniform(6, true), 5).unwrap_err(),
            Error::LpSizeCap { vertices: 6, cap: 5 }
        );
    }

    #[test]
    fn pivot_on_all_positive_zero_lp_is_one_cluster() {
        let g = uniform(7, true);
        let x = FractionalAssignment::from_fn(7, |_, _| 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            assert_eq!(round_pivot(&x, &g, &mut rng).num_clusters(), 1);
        }
    }

    #[test]
    fn kwik_on_uniform_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(kwik_cluster(&uniform(6, true), &mut rng).num_clusters(), 1);
        assert_eq!(kwik_cluster(&uniform(6, false), &mut rng).num_clusters(), 6);
    }

    #[test]
    fn cost_extremes() {
        let g = uniform(5, true);
        assert_eq!(disagreement_cost(&Clustering::from_labels(&[0; 5]), &g), 0);
        assert_eq!(disagreement_cost(&Clustering::singletons(5), &g), 10);
    }

    #[test]
    fn exact_partition_count_matches_bell_number() {
        // Every partition of 5 elements is visited once; the all-negative graph
        // optimum is the singleton partition.
        let (c, cost) = exact_clustering(&uniform(5, false)).unwrap();
        assert_eq!(cost, 0);
        assert_eq!(c.num_clusters(), 5);
    }

    #[test]
    fn labels_are_renumbered() {
        let c = Clustering::from_labels(&[7, 3, 7, 9]);
        assert_eq!(c.assignment(), &[0, 1, 0, 2]);
        assert_eq!(c.clusters(), &[vec![0, 2], vec![1], vec![3]]);
        assert!(Clustering::from_clusters(3, vec![vec![0, 1]]).is_err());
        assert!(Clustering::from_clusters(3, vec![vec![0, 1], vec![1, 2]]).is_err());
    }

    #[test]
    fn threshold_search_monotone_runs_to_floor() {
        let s = adapt_threshold::<Error, _>(|th| Ok(1.0 - th), 0.05).unwrap();
        assert!((s.threshold - 0.05).abs() < 1e-9);
        assert_eq!(s.trace.len(), 20);
    }

    #[test]
    fn threshold_search_stops_after_peak() {
        let s = adapt_threshold::<Error, _>(|th| Ok(-(th - 0.9f64).abs()), 0.05).unwrap();
        assert!((s.threshold - 0.9).abs() < 1e-9);
    }

    #[test]
    fn threshold_search_rejects_bad_step() {
        assert!(adapt_threshold::<Error, _>(|_| Ok(0.0), 0.5).is_err());
    }

    #[test]
    fn strict_threshold_boundary() {
        let s = SimilarityMatrix::from_values(2, vec![1.0, 0.5, 0.5, 1.0], crate::similarity::Metric::Dol).unwrap();
        assert_eq!(build_advice_graph(&s, 0.5).unwrap().sign(0, 1), -1);
        assert_eq!(build_advice_graph(&s, 0.49).unwrap().sign(0, 1), 1);
    }
}
