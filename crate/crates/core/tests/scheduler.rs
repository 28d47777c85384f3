mod common;

use common::rng;
use jsdm::channel::{generate_users, one_ring_covariance};
use jsdm::clustering::{cluster_users, ClusteringOptions};
use jsdm::scheduler::{
    assign_outliers, color_complement, jain_index, schedule_users, select_schedule, CompatibilityGraph,
};
use jsdm::{Approach, AntennaArray, SimilarityMatrix, System};
use proptest::prelude::*;
use rand::Rng;

fn random_compat(seed: u64, n: usize, density: f64) -> CompatibilityGraph {
    let mut g = rng(seed);
    let bits: Vec<bool> = (0..n * n).map(|_| g.random_bool(density)).collect();
    CompatibilityGraph::from_fn(n, |u, v| bits[u.min(v) * n + u.max(v)])
}

/// Fewest cliques covering `gu`, by enumerating set partitions.
fn min_clique_cover(gu: &CompatibilityGraph) -> usize {
    fn go(u: usize, blocks: &mut Vec<Vec<usize>>, gu: &CompatibilityGraph, best: &mut usize) {
        if blocks.len() >= *best {
            return;
        }
        if u == gu.num_vertices() {
            *best = blocks.len();
            return;
        }
        for i in 0..blocks.len() {
            if blocks[i].iter().all(|&v| gu.is_adjacent(u, v)) {
                blocks[i].push(u);
                go(u + 1, blocks, gu, best);
                blocks[i].pop();
            }
        }
        blocks.push(vec![u]);
        go(u + 1, blocks, gu, best);
        blocks.pop();
    }
    let mut best = gu.num_vertices().max(1);
    go(0, &mut Vec::new(), gu, &mut best);
    best.min(gu.num_vertices())
}

fn drop_system(seed: u64, approach: Approach) -> System {
    let array = AntennaArray::half_wavelength_ula(32).unwrap();
    let mut r = rng(seed);
    let users = generate_users(12, (-60f64.to_radians(), 60f64.to_radians()), 5f64.to_radians(), &mut r).unwrap();
    let covs: Vec<_> = users.iter().map(|u| one_ring_covariance(&array, u, 512).unwrap()).collect();
    let s = SimilarityMatrix::dol(&covs).unwrap();
    let c = cluster_users(&s, 0.9, ClusteringOptions::default(), &mut r).unwrap();
    System::new(covs, c.clustering, approach).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn colors_are_cliques_and_near_optimal(seed in any::<u64>(), n in 1usize..=8, density in 0.1f64..0.9) {
        let gu = random_compat(seed, n, density);
        let colors = color_complement(&gu, &mut rng(seed));
        let mut seen = vec![0; n];
        for c in &colors {
            prop_assert!(gu.is_clique(c));
            for &u in c {
                seen[u] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&k| k == 1));
        prop_assert!(colors.len() <= n);
        prop_assert!(colors.len() <= min_clique_cover(&gu) + 2);
        let set = assign_outliers(colors, &gu);
        prop_assert!(set.is_valid_cover(&gu));
    }

    #[test]
    fn selection_ignores_weight_scale(seed in any::<u64>(), scale in 0.01f64..100.0) {
        let mut g = rng(seed);
        let rates: Vec<Vec<f64>> = (0..4).map(|_| (0..5).map(|_| g.random_range(0.0..3.0)).collect()).collect();
        let weights: Vec<f64> = (0..5).map(|_| if g.random_bool(0.5) { 2.0 } else { 1.0 }).collect();
        let scaled: Vec<f64> = weights.iter().map(|w| w * scale).collect();
        prop_assert_eq!(select_schedule(&rates, &weights), select_schedule(&rates, &scaled));
    }

    #[test]
    fn jain_stays_in_range(rates in prop::collection::vec(0.0f64..10.0, 1..20)) {
        let j = jain_index(&rates);
        let k = rates.len() as f64;
        prop_assert!(j >= 1.0 / k - 1e-12 && j <= 1.0 + 1e-12);
    }
}

#[test]
fn schedules_are_deterministic_per_seed() {
    for approach in [Approach::Matched, Approach::ApproxBd] {
        let system = drop_system(3, approach);
        let a = schedule_users(&system, 2.0, &mut rng(9)).unwrap();
        let b = schedule_users(&system, 2.0, &mut rng(9)).unwrap();
        assert_eq!(a.schedules, b.schedules);
        assert!(a.schedules.is_valid_cover(&a.compatibility));
    }
}

/// Serving one schedule should keep every member at or above the SIR
/// tolerance when measured directly.
fn schedule_sir_violations(approach: Approach) -> Vec<(u64, f64, usize, f64)> {
    let mut bad = Vec::new();
    for seed in 0..5 {
        let system = drop_system(seed, approach);
        for alpha in [1.0, 2.0, 4.0] {
            let out = schedule_users(&system, alpha, &mut rng(seed)).unwrap();
            for s in &out.schedules.schedules {
                let eval = system.evaluate(s, 1.0).unwrap();
                for &u in s {
                    let sir = eval.report.sir[u];
                    if sir < alpha * (1.0 - 1e-9) {
                        bad.push((seed, alpha, u, sir));
                    }
                }
            }
        }
    }
    bad
}

#[test]
fn matched_schedules_meet_the_sir_tolerance() {
    assert_eq!(schedule_sir_violations(Approach::Matched), vec![]);
}

#[test]
fn approx_bd_schedules_meet_the_sir_tolerance() {
    assert_eq!(schedule_sir_violations(Approach::ApproxBd), vec![]);
}
