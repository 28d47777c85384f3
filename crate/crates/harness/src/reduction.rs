//! End-to-end check of the SAT to scheduling reduction.

use std::fmt;
use std::path::Path;

use jsdm::hardness::{brute_force_decision, build_instance, feasible_params, lemma_conditions, CnfFormula, Decision, LemmaChecks};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Context, HarnessError, Result};

pub const DEFAULT_DELTA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionReport {
    pub name: String,
    pub num_vars: usize,
    pub num_clauses: usize,
    pub rho: f64,
    pub beta: f64,
    pub delta: f64,
    pub satisfiable: bool,
    pub decision: Decision,
    pub lemmas: LemmaChecks,
}

impl ReductionReport {
    /// Whether the scheduling decision matches satisfiability.
    pub fn agrees(&self) -> bool {
        self.decision.answer == self.satisfiable
    }
}

impl fmt::Display for ReductionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: M={} D={} rho={:.4} beta={:.4} sat={} decision={} lemmas={} best={:?} max={:.4} gamma={:.4} {}",
            self.name,
            self.num_vars,
            self.num_clauses,
            self.rho,
            self.beta,
            self.satisfiable,
            self.decision.answer,
            self.lemmas.all(),
            self.decision.best_schedule,
            self.decision.max_objective,
            self.decision.gamma,
            if self.agrees() { "AGREE" } else { "MISMATCH" },
        )
    }
}

pub fn verify_formula(name: &str, f: &CnfFormula, delta: f64) -> Result<ReductionReport> {
    f.check_irreducible().context(|| name.to_string())?;
    let (m, d) = (f.num_vars(), f.num_clauses());
    let (rho, beta) = feasible_params(m, d, delta).context(|| format!("{name}: parameters"))?;
    let instance = build_instance(f, rho, beta, delta).context(|| format!("{name}: instance"))?;
    let decision = brute_force_decision(&instance).context(|| format!("{name}: enumeration"))?;
    Ok(ReductionReport {
        name: name.to_string(),
        num_vars: m,
        num_clauses: d,
        rho,
        beta,
        delta,
        satisfiable: f.sat_brute_force(),
        decision,
        lemmas: lemma_conditions(rho, beta, delta, m, d),
    })
}

pub fn verify_file(path: &Path, delta: f64) -> Result<ReductionReport> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
    let f = CnfFormula::parse_dimacs(&text).context(|| path.display().to_string())?;
    verify_formula(&path.display().to_string(), &f, delta)
}

/// Random irreducible formula with `m` variables and `d` clauses. Each
/// clause uses distinct variables with random signs. Returns `None` when no
/// such formula turned up within a fixed number of attempts, which is always
/// the case for `d < 2`.
pub fn random_irreducible<R: Rng + ?Sized>(m: usize, d: usize, rng: &mut R) -> Option<CnfFormula> {
    if m == 0 || d < 2 {
        return None;
    }
    let vars: Vec<i32> = (1..=m as i32).collect();
    for _ in 0..10_000 {
        let clauses: Vec<Vec<i32>> = (0..d)
            .map(|_| {
                let len = rng.random_range(1..=m);
                let mut vs = vars.clone();
                vs.shuffle(rng);
                vs.truncate(len);
                vs.into_iter().map(|v| if rng.random_bool(0.5) { v } else { -v }).collect()
            })
            .collect();
        if let Ok(f) = CnfFormula::new(m, clauses) {
            if f.is_irreducible() && f.num_clauses() == d {
                return Some(f);
            }
        }
    }
    None
}

/// Corpus of irreducible formulas with `2 ≤ M ≤ max_vars` and
/// `2 ≤ D ≤ max_clauses`, half satisfiable and half not where possible.
pub fn random_corpus<R: Rng + ?Sized>(size: usize, max_vars: usize, max_clauses: usize, rng: &mut R) -> Vec<CnfFormula> {
    let want_unsat = size / 2;
    let mut sat = Vec::new();
    let mut unsat = Vec::new();
    let mut attempts = 0;
    while sat.len() + unsat.len() < size && attempts < 100_000 {
        attempts += 1;
        let m = rng.random_range(2..=max_vars.max(2));
        let d = rng.random_range(2..=max_clauses.max(2));
        let Some(f) = random_irreducible(m, d, rng) else { continue };
        if f.sat_brute_force() {
            if sat.len() < size - want_unsat {
                sat.push(f);
            }
        } else if unsat.len() < want_unsat {
            unsat.push(f);
        }
    }
    sat.into_iter().chain(unsat).collect()
}
