//! Elimination / grouping / verification user scheduling.

use rand::Rng;

use crate::error::{Error, Result};
use crate::precoding::Approach;
use crate::scalar::{count, lit, Real};
use crate::system::System;

/// Directed user-level interference graph. `weight(s, t)` is the normalized
/// interference user `s` causes at user `t`; same-group pairs carry no edge.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceGraph<T: Real> {
    n: usize,
    group_of: Vec<usize>,
    weight: Vec<T>,
    alive: Vec<bool>,
}

impl<T: Real> InterferenceGraph<T> {
    /// Builds a graph from per-user groups and a weight oracle evaluated on
    /// cross-group pairs.
    pub fn from_fn(group_of: Vec<usize>, mut weight: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let n = group_of.len();
        let mut w = vec![T::zero(); n * n];
        let mut alive = vec![false; n * n];
        for s in 0..n {
            for t in 0..n {
                if group_of[s] != group_of[t] {
                    let v = weight(s, t);
                    if !(v >= T::zero()) {
                        return Err(Error::InvalidArgument(format!("negative or NaN edge weight {s}->{t}")));
                    }
                    w[s * n + t] = v;
                    alive[s * n + t] = true;
                }
            }
        }
        Ok(Self { n, group_of, weight: w, alive })
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn group_of(&self, u: usize) -> usize {
        self.group_of[u]
    }

    pub fn weight(&self, s: usize, t: usize) -> T {
        self.weight[s * self.n + t]
    }

    pub fn is_alive(&self, s: usize, t: usize) -> bool {
        self.alive[s * self.n + t]
    }

    pub fn num_alive(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    /// Sum of alive incoming weights.
    pub fn incoming(&self, t: usize) -> T {
        (0..self.n)
            .filter(|&s| self.is_alive(s, t))
            .fold(T::zero(), |a, s| a + self.weight(s, t))
    }

    /// Graph-level SIR `1 / Σ incoming`; infinite without interference.
    pub fn sir(&self, t: usize) -> T {
        let load = self.incoming(t);
        if load > T::zero() {
            T::one() / load
        } else {
            lit(f64::INFINITY)
        }
    }

    fn kill(&mut self, s: usize, t: usize) {
        self.alive[s * self.n + t] = false;
    }

    /// Replaces the weights, keeping liveness.
    fn reweight(&mut self, mut weight: impl FnMut(usize, usize) -> T) {
        for s in 0..self.n {
            for t in 0..self.n {
                if self.group_of[s] != self.group_of[t] {
                    self.weight[s * self.n + t] = weight(s, t);
                }
            }
        }
    }

    /// Heaviest alive edge into `t`; ties go to the lowest source group, then
    /// the lowest source user.
    fn heaviest_incoming(&self, t: usize) -> Option<usize> {
        let mut best: Option<usize> = None;
        for s in 0..self.n {
            if !self.is_alive(s, t) {
                continue;
            }
            best = match best {
                None => Some(s),
                Some(b) => {
                    let (ws, wb) = (self.weight(s, t), self.weight(b, t));
                    let better = ws > wb || (ws == wb && self.group_of[s] < self.group_of[b]);
                    Some(if better { s } else { b })
                }
            };
        }
        best
    }

    /// Groups `h ≠ g` with at least one pair of users joined in both
    /// directions.
    pub fn mutual_neighbours(&self, num_groups: usize) -> Vec<Vec<usize>> {
        let mut adj = vec![vec![false; num_groups]; num_groups];
        for s in 0..self.n {
            for t in (s + 1)..self.n {
                if self.is_alive(s, t) && self.is_alive(t, s) {
                    adj[self.group_of[s]][self.group_of[t]] = true;
                    adj[self.group_of[t]][self.group_of[s]] = true;
                }
            }
        }
        adj.into_iter()
            .map(|row| row.into_iter().enumerate().filter(|&(_, a)| a).map(|(h, _)| h).collect())
            .collect()
    }
}

/// One elimination pass in ascending user order. Returns the number of
/// deleted edges.
pub fn eliminate_pass<T: Real>(graph: &mut InterferenceGraph<T>, alpha: T) -> usize {
    let mut deleted = 0;
    for t in 0..graph.num_vertices() {
        while graph.incoming(t) * alpha > T::one() {
            match graph.heaviest_incoming(t) {
                Some(s) => {
                    graph.kill(s, t);
                    deleted += 1;
                }
                None => break,
            }
        }
    }
    deleted
}

/// User-level weights from the system's group-level interference matrix.
pub fn build_graph<T: Real>(system: &System<T>, neighbours: &[Vec<usize>]) -> Result<InterferenceGraph<T>> {
    let e = system.normalized_interference(neighbours)?;
    let group_of: Vec<usize> = (0..system.num_users()).map(|u| system.group_of(u)).collect();
    InterferenceGraph::from_fn(group_of.clone(), |s, t| {
        e[(group_of[s], group_of[t])] * system.edge_scale(group_of[s])
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Elimination<T: Real> {
    pub graph: InterferenceGraph<T>,
    /// Passes run, including the final one that deleted nothing (matched
    /// precoding always runs exactly one).
    pub passes: usize,
}

/// Removes interference edges until every user's graph SIR reaches `alpha`.
///
/// With approximate block diagonalization the precoders, fixed points and
/// weights are rebuilt after every pass from the surviving mutual
/// neighbours, until a pass deletes nothing.
pub fn eliminate<T: Real>(system: &System<T>, alpha: T) -> Result<Elimination<T>> {
    if !(alpha > T::zero()) {
        return Err(Error::InvalidArgument("alpha must be positive".into()));
    }
    let g = system.num_groups();
    let all: Vec<Vec<usize>> = (0..g).map(|h| (0..g).filter(|&o| o != h).collect()).collect();
    let mut graph = build_graph(system, &all)?;
    let mut passes = 0;
    loop {
        passes += 1;
        let deleted = eliminate_pass(&mut graph, alpha);
        if deleted == 0 || system.approach == Approach::Matched {
            break;
        }
        let neighbours = graph.mutual_neighbours(g);
        let fresh = build_graph(system, &neighbours)?;
        graph.reweight(|s, t| fresh.weight(s, t));
    }
    Ok(Elimination { graph, passes })
}

/// Undirected compatibility graph over users.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompatibilityGraph {
    n: usize,
    adj: Vec<bool>,
}

impl CompatibilityGraph {
    /// Symmetric graph from an oracle evaluated on `u < v`.
    pub fn from_fn(n: usize, mut edge: impl FnMut(usize, usize) -> bool) -> Self {
        let mut adj = vec![false; n * n];
        for u in 0..n {
            for v in (u + 1)..n {
                let e = edge(u, v);
                adj[u * n + v] = e;
                adj[v * n + u] = e;
            }
        }
        Self { n, adj }
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn is_adjacent(&self, u: usize, v: usize) -> bool {
        u != v && self.adj[u * self.n + v]
    }

    pub fn is_clique(&self, members: &[usize]) -> bool {
        members
            .iter()
            .enumerate()
            .all(|(i, &u)| members[i + 1..].iter().all(|&v| self.is_adjacent(u, v)))
    }
}

/// Users of different groups are compatible when both directed edges
/// survived; users of the same group never interfere and are always
/// compatible.
pub fn to_undirected<T: Real>(graph: &InterferenceGraph<T>) -> CompatibilityGraph {
    CompatibilityGraph::from_fn(graph.num_vertices(), |u, v| {
        graph.group_of(u) == graph.group_of(v) || (graph.is_alive(u, v) && graph.is_alive(v, u))
    })
}

/// Colors the complement of `gu` by repeated maximal independent set
/// extraction with a lowest-degree pivot. Every color is a clique of `gu`.
pub fn color_complement<R: Rng + ?Sized>(gu: &CompatibilityGraph, rng: &mut R) -> Vec<Vec<usize>> {
    let n = gu.num_vertices();
    let conflict = |u: usize, v: usize| u != v && !gu.is_adjacent(u, v);
    let mut colored = vec![false; n];
    let mut colors = Vec::new();
    while colored.iter().any(|&c| !c) {
        let mut remaining: Vec<usize> = (0..n).filter(|&u| !colored[u]).collect();
        let mut color = Vec::new();
        while !remaining.is_empty() {
            let degree = |u: usize| remaining.iter().filter(|&&v| conflict(u, v)).count();
            let min = remaining.iter().map(|&u| degree(u)).min().expect("non-empty");
            let ties: Vec<usize> = remaining.iter().copied().filter(|&u| degree(u) == min).collect();
            let w = ties[rng.random_range(0..ties.len())];
            color.push(w);
            remaining.retain(|&u| u != w && !conflict(w, u));
        }
        color.sort_unstable();
        for &u in &color {
            colored[u] = true;
        }
        colors.push(color);
    }
    colors
}

/// Schedules (colors) with multi-membership for outliers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleSet {
    pub schedules: Vec<Vec<usize>>,
    /// `membership[u]` lists the schedule indices containing user `u`.
    pub membership: Vec<Vec<usize>>,
}

impl ScheduleSet {
    pub fn from_schedules(num_users: usize, mut schedules: Vec<Vec<usize>>) -> Self {
        let mut membership = vec![Vec::new(); num_users];
        for (i, s) in schedules.iter_mut().enumerate() {
            s.sort_unstable();
            s.dedup();
            for &u in s.iter() {
                membership[u].push(i);
            }
        }
        Self { schedules, membership }
    }

    pub fn len(&self) -> usize {
        self.schedules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.schedules.is_empty()
    }

    pub fn num_users(&self) -> usize {
        self.membership.len()
    }

    /// Every user is covered and every schedule is a clique of `gu`.
    pub fn is_valid_cover(&self, gu: &CompatibilityGraph) -> bool {
        self.membership.iter().all(|m| !m.is_empty()) && self.schedules.iter().all(|s| gu.is_clique(s))
    }
}

/// Adds every user to each other color whose members it is compatible with,
/// then drops duplicate schedules.
pub fn assign_outliers(colors: Vec<Vec<usize>>, gu: &CompatibilityGraph) -> ScheduleSet {
    let mut colors = colors;
    for u in 0..gu.num_vertices() {
        for c in colors.iter_mut() {
            if !c.contains(&u) && c.iter().all(|&v| gu.is_adjacent(u, v)) {
                c.push(u);
            }
        }
    }
    let mut unique: Vec<Vec<usize>> = Vec::new();
    for mut c in colors {
        c.sort_unstable();
        if !unique.contains(&c) {
            unique.push(c);
        }
    }
    ScheduleSet::from_schedules(gu.num_vertices(), unique)
}

/// Weight 2 for members of schedule `slot mod L`, 1 otherwise.
pub fn update_weights<T: Real>(slot: usize, num_schedules: usize, membership: &[Vec<usize>]) -> Vec<T> {
    let turn = if num_schedules == 0 { usize::MAX } else { slot % num_schedules };
    membership
        .iter()
        .map(|m| if m.contains(&turn) { lit(2.0) } else { T::one() })
        .collect()
}

/// Index of the schedule with the largest weighted sum-rate; ties go to the
/// lowest index. `rates[i][u]` is user `u`'s rate under schedule `i`.
pub fn select_schedule<T: Real>(rates: &[Vec<T>], weights: &[T]) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, r) in rates.iter().enumerate() {
        let utility = r.iter().zip(weights).fold(T::zero(), |a, (&x, &w)| a + x * w);
        if best.is_none_or(|(_, b)| utility > b) {
            best = Some((i, utility));
        }
    }
    best.map(|(i, _)| i)
}

/// Jain's fairness index `(ΣR)² / (K ΣR²)`. All-zero rates count as equal.
pub fn jain_index<T: Real>(rates: &[T]) -> T {
    let sum = rates.iter().fold(T::zero(), |a, &r| a + r);
    let sq = rates.iter().fold(T::zero(), |a, &r| a + r * r);
    if rates.is_empty() || !(sq > T::zero()) {
        return T::one();
    }
    sum * sum / (count::<T>(rates.len()) * sq)
}

/// Full scheduling pipeline for one SIR tolerance.
#[derive(Debug, Clone)]
pub struct ScheduleOutcome<T: Real> {
    pub schedules: ScheduleSet,
    pub elimination: Elimination<T>,
    pub compatibility: CompatibilityGraph,
}

pub fn schedule_users<T: Real, R: Rng + ?Sized>(system: &System<T>, alpha: T, rng: &mut R) -> Result<ScheduleOutcome<T>> {
    let elimination = eliminate(system, alpha)?;
    let compatibility = to_undirected(&elimination.graph);
    let colors = color_complement(&compatibility, rng);
    let schedules = assign_outliers(colors, &compatibility);
    Ok(ScheduleOutcome { schedules, elimination, compatibility })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(5)
    }

    #[test]
    fn weights_follow_rotation() {
        let membership = vec![vec![0], vec![1], vec![1, 3], vec![2]];
        let w: Vec<f64> = update_weights(5, 4, &membership);
        assert_eq!(w, vec![1.0, 2.0, 2.0, 1.0]);
        let w: Vec<f64> = update_weights(3, 4, &membership);
        assert_eq!(w, vec![1.0, 1.0, 2.0, 1.0]);
        let w: Vec<f64> = update_weights(7, 1, &[vec![0], vec![0]]);
        assert_eq!(w, vec![2.0, 2.0]);
    }

    #[test]
    fn jain_examples() {
        assert!((jain_index(&[2.0f64, 2.0, 2.0]) - 1.0).abs() < 1e-12);
        assert!((jain_index(&[0.0f64, 5.0, 0.0, 0.0]) - 0.25).abs() < 1e-12);
        assert!((jain_index(&[1.0f64, 3.0]) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn selection_prefers_lowest_index_on_ties() {
        let rates = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![2.0, 0.0]];
        assert_eq!(select_schedule(&rates, &[1.0, 1.0]), Some(2));
        assert_eq!(select_schedule(&rates, &[1.0, 2.0]), Some(1));
        assert_eq!(select_schedule(&rates[..2], &[1.0, 1.0]), Some(0));
        assert_eq!(select_schedule::<f64>(&[], &[]), None);
    }

    #[test]
    fn satisfied_graph_is_untouched() {
        let mut g = InterferenceGraph::from_fn(vec![0, 1, 2], |_, _| 0.1f64).unwrap();
        assert_eq!(eliminate_pass(&mut g, 2.0), 0);
        assert_eq!(g.num_alive(), 6);
    }

    #[test]
    fn mutual_strong_interference_splits_groups() {
        let mut g = InterferenceGraph::from_fn(vec![0, 1], |_, _| 0.8f64).unwrap();
        assert_eq!(eliminate_pass(&mut g, 2.0), 2);
        let gu = to_undirected(&g);
        assert!(!gu.is_adjacent(0, 1));
        assert_eq!(color_complement(&gu, &mut rng()).len(), 2);
    }

    #[test]
    fn heaviest_edge_goes_first() {
        let weights = [[0.0, 0.0, 0.0], [0.3, 0.0, 0.0], [0.6, 0.0, 0.0]];
        let mut g = InterferenceGraph::from_fn(vec![0, 1, 2], |s, t| weights[s][t]).unwrap();
        eliminate_pass(&mut g, 2.0);
        assert!(g.is_alive(1, 0));
        assert!(!g.is_alive(2, 0));
    }

    #[test]
    fn equal_weight_ties_use_lowest_group() {
        let mut g = InterferenceGraph::from_fn(vec![0, 2, 1], |_, t| if t == 0 { 0.6 } else { 0.0 }).unwrap();
        eliminate_pass(&mut g, 1.0);
        assert!(g.is_alive(1, 0));
        assert!(!g.is_alive(2, 0));
    }

    #[test]
    fn same_group_users_have_no_edges() {
        let g = InterferenceGraph::from_fn(vec![0, 0, 1], |_, _| 1.0f64).unwrap();
        assert!(!g.is_alive(0, 1));
        assert!(to_undirected(&g).is_adjacent(0, 1));
    }

    #[test]
    fn complete_and_empty_compatibility() {
        let full = CompatibilityGraph::from_fn(5, |_, _| true);
        assert_eq!(color_complement(&full, &mut rng()), vec![vec![0, 1, 2, 3, 4]]);
        let none = CompatibilityGraph::from_fn(5, |_, _| false);
        assert_eq!(color_complement(&none, &mut rng()).len(), 5);
    }

    #[test]
    fn two_cliques_need_two_colors() {
        let gu = CompatibilityGraph::from_fn(4, |u, v| (u < 2) == (v < 2));
        let colors = color_complement(&gu, &mut rng());
        assert_eq!(colors.len(), 2);
        assert!(colors.iter().all(|c| gu.is_clique(c)));
    }

    #[test]
    fn universal_user_joins_every_color() {
        // 0 is compatible with everyone; 1..=3 are mutually incompatible.
        let gu = CompatibilityGraph::from_fn(4, |u, _| u == 0);
        let set = assign_outliers(vec![vec![0, 1], vec![2], vec![3]], &gu);
        assert_eq!(set.schedules, vec![vec![0, 1], vec![0, 2], vec![0, 3]]);
        assert_eq!(set.membership[0], vec![0, 1, 2]);
        assert!(set.is_valid_cover(&gu));
    }

    #[test]
    fn outliers_without_candidates_change_nothing() {
        let gu = CompatibilityGraph::from_fn(4, |u, v| (u < 2) == (v < 2));
        let set = assign_outliers(vec![vec![0, 1], vec![2, 3]], &gu);
        assert_eq!(set.schedules, vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn duplicate_schedules_collapse() {
        let gu = CompatibilityGraph::from_fn(2, |_, _| true);
        let set = assign_outliers(vec![vec![0], vec![1]], &gu);
        assert_eq!(set.schedules, vec![vec![0, 1]]);
    }
}
