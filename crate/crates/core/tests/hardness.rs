mod common;

use common::rng;
use jsdm::hardness::{
    brute_force_decision, build_instance, feasible_params, lemma_conditions, literal_user, AbstractGainInstance,
    CnfFormula,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

const DELTA: f64 = 0.05;

fn formula(m: usize, clauses: &[&[i32]]) -> CnfFormula {
    CnfFormula::new(m, clauses.iter().map(|c| c.to_vec()).collect()).unwrap()
}

fn instance(f: &CnfFormula) -> AbstractGainInstance {
    let (rho, beta) = feasible_params(f.num_vars(), f.num_clauses(), DELTA).unwrap();
    build_instance(f, rho, beta, DELTA).unwrap()
}

/// Irreducible formulas with 2 ≤ M ≤ 3 and 2 ≤ D ≤ 3.
fn corpus(size: usize, seed: u64) -> Vec<CnfFormula> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    while out.len() < size {
        let m = r.random_range(2..=3);
        let d = r.random_range(2..=3);
        let clauses: Vec<Vec<i32>> = (0..d)
            .map(|_| {
                let mut vars: Vec<i32> = (1..=m as i32).collect();
                vars.shuffle(&mut r);
                vars.truncate(r.random_range(1..=m));
                vars.into_iter().map(|v| if r.random_bool(0.5) { v } else { -v }).collect()
            })
            .collect();
        let f = CnfFormula::new(m, clauses).unwrap();
        if f.is_irreducible() && f.num_clauses() == d {
            out.push(f);
        }
    }
    out
}

fn schedules(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..1 << n).map(move |mask| (0..n).filter(|&i| mask >> i & 1 == 1).collect())
}

fn literal_count(inst: &AbstractGainInstance, s: &[usize]) -> usize {
    s.iter().filter(|&&u| !inst.is_clause_user(u)).count()
}

#[test]
fn hand_expanded_objective() {
    let f = formula(2, &[&[1, 2], &[-1, -2]]);
    let (rho, beta, delta) = (3.0, 6.0, 0.05);
    let inst = build_instance(&f, rho, beta, delta).unwrap();
    // x₁ and x̄₂ satisfy both clauses; each clause sees one foreign literal.
    let x1 = literal_user(2, 1);
    let nx2 = literal_user(2, -2);
    let s = vec![x1, nx2, inst.clause_user(0), inst.clause_user(1)];
    let lit_term = (1.0 + rho / (1.0 + delta)).log2();
    let clause_term = (1.0 + beta / (1.0 + 0.5)).log2();
    let v = inst.evaluate(&s);
    assert!(v.feasible);
    assert!((v.objective - (2.0 * lit_term + 2.0 * clause_term)).abs() < 1e-12);
}

#[test]
fn single_variable_contradiction_has_no_parameters() {
    let f = formula(1, &[&[1], &[-1]]);
    assert!(f.is_irreducible());
    assert!(!f.sat_brute_force());
    assert!(feasible_params(1, 2, DELTA).is_err());
}

#[test]
fn paper_sized_parameters_satisfy_lemmas() {
    let (rho, beta) = feasible_params(3, 3, 0.1).unwrap();
    assert!(3.0 * 0.1 < rho);
    assert!(lemma_conditions(rho, beta, 0.1, 3, 3).all());
    assert!(!lemma_conditions(1e-3, 1e-3, 5.0, 3, 3).full_literals);
}

#[test]
fn satisfiable_formulas_are_decided_yes() {
    for f in corpus(60, 7).into_iter().filter(CnfFormula::sat_brute_force) {
        let d = brute_force_decision(&instance(&f)).unwrap();
        assert!(d.answer, "{:?}", f.clauses());
        assert!(d.gamma_threshold < d.max_objective);
    }
}

#[test]
fn satisfiable_optimum_schedules_all_literals() {
    for f in corpus(60, 8).into_iter().filter(CnfFormula::sat_brute_force) {
        let inst = instance(&f);
        let d = brute_force_decision(&inst).unwrap();
        assert_eq!(literal_count(&inst, &d.best_schedule), f.num_vars(), "{:?}", f.clauses());
    }
}

/// An unsatisfiable formula whose scheduling instance still clears γ: a
/// schedule with a single literal lets every clause user in, and the clause
/// gain β outweighs the missing literal.
#[test]
fn unsatisfiable_counterexample_clears_gamma() {
    let f = formula(2, &[&[-1], &[1, 2], &[-2, 1]]);
    assert!(f.is_irreducible());
    assert!(!f.sat_brute_force());
    let inst = instance(&f);
    let d = brute_force_decision(&inst).unwrap();
    assert!(d.answer);
    assert_eq!(d.best_schedule, vec![0, 4, 5, 6]);
    assert_eq!(literal_count(&inst, &d.best_schedule), 1);
    assert!(d.max_objective > d.gamma);
    assert!(lemma_conditions(inst.params().rho, inst.params().beta, DELTA, 2, 3).all());
}

#[test]
fn unsatisfiable_corpus_disagrees_with_decision() {
    let unsat: Vec<_> = corpus(80, 9).into_iter().filter(|f| !f.sat_brute_force()).collect();
    assert!(!unsat.is_empty());
    let wrong = unsat.iter().filter(|f| brute_force_decision(&instance(f)).unwrap().answer).count();
    assert_eq!(wrong, unsat.len());
}

#[test]
fn complements_never_share_a_feasible_schedule() {
    for f in corpus(30, 10) {
        let inst = instance(&f);
        let m = f.num_vars();
        for s in schedules(inst.num_users()).filter(|s| inst.evaluate(s).feasible) {
            for v in 1..=m as i32 {
                assert!(!(s.contains(&literal_user(m, v)) && s.contains(&literal_user(m, -v))), "{s:?}");
            }
        }
    }
}

#[test]
fn admissible_clause_users_never_lower_the_objective() {
    for f in corpus(30, 11) {
        let inst = instance(&f);
        for s in schedules(inst.num_users()) {
            let base = inst.evaluate(&s);
            if !base.feasible {
                continue;
            }
            for d in 0..f.num_clauses() {
                let c = inst.clause_user(d);
                if s.contains(&c) {
                    continue;
                }
                let mut t = s.clone();
                t.push(c);
                let grown = inst.evaluate(&t);
                if grown.feasible {
                    assert!(grown.objective >= base.objective - 1e-12, "{:?} + {c}", s);
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn dimacs_round_trips(seed in any::<u64>()) {
        for f in corpus(3, seed) {
            prop_assert_eq!(CnfFormula::parse_dimacs(&f.to_dimacs()).unwrap(), f);
        }
    }
}
