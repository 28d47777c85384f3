//! Scheduling instances built from CNF formulas, with exhaustive checks that
//! the scheduling decision matches satisfiability.
//!
//! Users `0..M` are the positive literals `x_1..x_M`, users `M..2M` their
//! complements and users `2M..2M+D` the clauses. `gain[j][i]` is the gain
//! from user `j` onto user `i`; the diagonal holds the direct-link gains.

use std::collections::BTreeSet;

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::scalar::CMatrix;

/// Largest instance accepted by [`brute_force_decision`].
pub const ENUMERATION_CAP: usize = 16;
/// Relative bump applied to the threshold objective.
pub const GAMMA_BUMP: f64 = 1e-9;

/// Conjunction of clauses over variables `1..=num_vars`. Literals are signed
/// variable indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfFormula {
    num_vars: usize,
    clauses: Vec<Vec<i32>>,
}

impl CnfFormula {
    /// Validates literal ranges and normalizes each clause (sorted, without
    /// repeated literals).
    pub fn new(num_vars: usize, clauses: Vec<Vec<i32>>) -> Result<Self> {
        let mut normalized = Vec::with_capacity(clauses.len());
        for (d, clause) in clauses.into_iter().enumerate() {
            if clause.is_empty() {
                return Err(Error::InvalidArgument(format!("clause {d} is empty")));
            }
            let mut set = BTreeSet::new();
            for lit in clause {
                let v = lit.unsigned_abs() as usize;
                if lit == 0 || v > num_vars {
                    return Err(Error::InvalidArgument(format!("literal {lit} outside 1..={num_vars}")));
                }
                set.insert(lit);
            }
            normalized.push(set.into_iter().collect());
        }
        Ok(Self { num_vars, clauses: normalized })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Vec<i32>] {
        &self.clauses
    }

    /// Rejects formulas where some variable appears in only one polarity or a
    /// clause holds a literal together with its complement.
    pub fn check_irreducible(&self) -> Result<()> {
        for (d, clause) in self.clauses.iter().enumerate() {
            if let Some(l) = clause.iter().find(|&&l| clause.contains(&-l)) {
                return Err(Error::ReducibleFormula(format!(
                    "clause {} contains x{} and its complement, so it is trivially satisfied",
                    d + 1,
                    l.abs()
                )));
            }
        }
        for v in 1..=self.num_vars as i32 {
            let pos = self.clauses.iter().any(|c| c.contains(&v));
            let neg = self.clauses.iter().any(|c| c.contains(&-v));
            if !(pos && neg) {
                return Err(Error::ReducibleFormula(format!(
                    "only one of x{v} and its complement appears in the formula"
                )));
            }
        }
        Ok(())
    }

    pub fn is_irreducible(&self) -> bool {
        self.check_irreducible().is_ok()
    }

    pub fn evaluate(&self, assignment: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|&l| assignment[l.unsigned_abs() as usize - 1] == (l > 0)))
    }

    /// First satisfying assignment in lexicographic order, if any.
    pub fn satisfying_assignment(&self) -> Option<Vec<bool>> {
        let m = self.num_vars;
        (0u64..1 << m)
            .map(|mask| (0..m).map(|i| mask >> i & 1 == 1).collect::<Vec<_>>())
            .find(|a| self.evaluate(a))
    }

    /// Exhaustive satisfiability over all `2^M` assignments.
    pub fn sat_brute_force(&self) -> bool {
        self.satisfying_assignment().is_some()
    }

    /// Parses DIMACS CNF text (`c` comments, a `p cnf M D` header, clauses as
    /// signed integers terminated by `0`).
    pub fn parse_dimacs(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut clauses = Vec::new();
        let mut current = Vec::new();
        let mut last_line = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            last_line = line_no;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            if line.starts_with('p') {
                let parts: Vec<&str> = line.split_whitespace().collect();
                if header.is_some() {
                    return Err(Error::Dimacs { line: line_no, message: "duplicate header".into() });
                }
                if parts.len() != 4 || parts[1] != "cnf" {
                    return Err(Error::Dimacs { line: line_no, message: "expected `p cnf <vars> <clauses>`".into() });
                }
                let parse = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|_| Error::Dimacs { line: line_no, message: format!("bad count `{s}`") })
                };
                header = Some((parse(parts[2])?, parse(parts[3])?));
                continue;
            }
            let (vars, _) = header.ok_or(Error::Dimacs { line: line_no, message: "clause before header".into() })?;
            for tok in line.split_whitespace() {
                let lit: i32 = tok
                    .parse()
                    .map_err(|_| Error::Dimacs { line: line_no, message: format!("bad literal `{tok}`") })?;
                if lit == 0 {
                    clauses.push(std::mem::take(&mut current));
                } else if lit.unsigned_abs() as usize > vars {
                    return Err(Error::Dimacs { line: line_no, message: format!("literal {lit} exceeds {vars} variables") });
                } else {
                    current.push(lit);
                }
            }
        }
        let (vars, count) = header.ok_or(Error::Dimacs { line: last_line, message: "missing header".into() })?;
        if !current.is_empty() {
            clauses.push(current);
        }
        if clauses.len() != count {
            return Err(Error::Dimacs {
                line: last_line,
                message: format!("header declares {count} clauses, found {}", clauses.len()),
            });
        }
        Self::new(vars, clauses).map_err(|e| Error::Dimacs { line: last_line, message: e.to_string() })
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                out.push_str(&format!("{l} "));
            }
            out.push_str("0\n");
        }
        out
    }
}

/// Gain and tolerance parameters of an instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionParams {
    pub rho: f64,
    pub beta: f64,
    pub delta: f64,
    pub eps1: f64,
    pub eps2: f64,
}

/// Abstract gain-matrix scheduling instance.
#[derive(Debug, Clone, PartialEq)]
pub struct AbstractGainInstance {
    num_vars: usize,
    num_clauses: usize,
    gain: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    params: ReductionParams,
}

/// User index of a signed literal.
pub fn literal_user(num_vars: usize, lit: i32) -> usize {
    let v = lit.unsigned_abs() as usize - 1;
    if lit > 0 {
        v
    } else {
        num_vars + v
    }
}

/// Builds the instance. `ε₁` and `ε₂` take their largest admissible values.
pub fn build_instance(f: &CnfFormula, rho: f64, beta: f64, delta: f64) -> Result<AbstractGainInstance> {
    f.check_irreducible()?;
    let m = f.num_vars();
    let d = f.num_clauses();
    if m < 2 {
        return Err(Error::ReductionParameters(
            "M = 1 leaves no admissible ε₂ (its bound β/(M−1) needs M ≥ 2)".into(),
        ));
    }
    if !(rho > 0.0 && beta > 0.0 && delta > 0.0) {
        return Err(Error::ReductionParameters("ρ, β and δ must be positive".into()));
    }
    if !(d as f64 * delta < rho) {
        return Err(Error::ReductionParameters(format!("Dδ = {} must be below ρ = {rho}; choose a smaller δ", d as f64 * delta)));
    }
    let n = 2 * m + d;
    let mut gain = vec![vec![0.0; n]; n];
    for v in 0..m {
        gain[v][v] = rho;
        gain[m + v][m + v] = rho;
        gain[v][m + v] = rho;
        gain[m + v][v] = rho;
    }
    for (j, clause) in f.clauses().iter().enumerate() {
        let c = 2 * m + j;
        gain[c][c] = beta;
        let members: BTreeSet<usize> = clause.iter().map(|&l| literal_user(m, l)).collect();
        for l in 0..2 * m {
            if !members.contains(&l) {
                gain[l][c] = 1.0 / m as f64;
                gain[c][l] = delta;
            }
        }
    }
    let eps1 = (rho - d as f64 * delta) / (d as f64 * delta);
    let eps2 = beta / (m as f64 - 1.0);
    let mut alpha = vec![1.0 + eps1; 2 * m];
    alpha.extend(std::iter::repeat_n(beta + eps2, d));
    Ok(AbstractGainInstance {
        num_vars: m,
        num_clauses: d,
        gain,
        alpha,
        params: ReductionParams { rho, beta, delta, eps1, eps2 },
    })
}

/// Objective and feasibility of one schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleValue {
    pub objective: f64,
    pub feasible: bool,
}

impl AbstractGainInstance {
    pub fn num_users(&self) -> usize {
        self.gain.len()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.num_clauses
    }

    pub fn params(&self) -> ReductionParams {
        self.params
    }

    pub fn alpha(&self, user: usize) -> f64 {
        self.alpha[user]
    }

    /// Gain from `from` onto `to`.
    pub fn gain(&self, from: usize, to: usize) -> f64 {
        self.gain[from][to]
    }

    pub fn clause_user(&self, clause: usize) -> usize {
        2 * self.num_vars + clause
    }

    pub fn is_clause_user(&self, user: usize) -> bool {
        user >= 2 * self.num_vars
    }

    fn interference(&self, user: usize, schedule: &[usize]) -> f64 {
        schedule.iter().filter(|&&j| j != user).map(|&j| self.gain[j][user]).sum()
    }

    /// Noise-free SIR of `user` within `schedule`; infinite without
    /// interference.
    pub fn sir(&self, user: usize, schedule: &[usize]) -> f64 {
        let i = self.interference(user, schedule);
        if i > 0.0 {
            self.gain[user][user] / i
        } else {
            f64::INFINITY
        }
    }

    /// `Σ log2(1 + G_ii / (1 + I_i))` with feasibility from the noise-free SIR.
    pub fn evaluate(&self, schedule: &[usize]) -> ScheduleValue {
        let mut objective = 0.0;
        let mut feasible = true;
        for &i in schedule {
            let interference = self.interference(i, schedule);
            if self.sir(i, schedule) < self.alpha[i] {
                feasible = false;
            }
            objective += (1.0 + self.gain[i][i] / (1.0 + interference)).log2();
        }
        ScheduleValue { objective, feasible }
    }
}

/// Outcome of the three sufficient conditions on the parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LemmaChecks {
    /// Adding admissible clause users never lowers the objective.
    pub clauses_increase: bool,
    /// The optimum schedules the full set of `M` literals.
    pub full_literals: bool,
    /// Scheduling every clause beats any schedule with fewer clauses.
    pub all_clauses_win: bool,
}

impl LemmaChecks {
    pub fn all(&self) -> bool {
        self.clauses_increase && self.full_literals && self.all_clauses_win
    }
}

pub fn lemma_conditions(rho: f64, beta: f64, delta: f64, m: usize, d: usize) -> LemmaChecks {
    let mf = m as f64;
    let df = d as f64;
    let l1 = (1.0 + beta / (1.0 + (mf - 1.0) / mf)).log2()
        + mf * (1.0 - rho * delta / ((1.0 + rho) * (1.0 + delta))).log2();
    let l2 = (1.0 + rho / (1.0 + (df - 1.0) * delta)).log2()
        + df * (1.0 - beta / ((beta + 1.0) * (mf + 1.0))).log2();
    let l3 = mf * ((1.0 + rho + (df - 1.0) * delta) / ((1.0 + (df - 1.0) * delta) * (1.0 + rho))).log2()
        + df * ((beta * mf + 2.0 * mf - 1.0) / (2.0 * mf - 1.0 + beta * (2.0 * mf - 1.0))).log2()
        + (1.0 + beta).log2();
    LemmaChecks { clauses_increase: l1 >= 0.0, full_literals: l2 >= 0.0, all_clauses_win: l3 >= 0.0 }
}

/// Closed-form `(ρ, β)` that satisfy all three conditions for the given
/// size and cross gain `δ`.
pub fn feasible_params(m: usize, d: usize, delta: f64) -> Result<(f64, f64)> {
    if m < 2 {
        return Err(Error::ReductionParameters(
            "M = 1 leaves no admissible ε₂; use at least two variables".into(),
        ));
    }
    if d == 0 {
        return Err(Error::ReductionParameters("formula has no clauses".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::ReductionParameters("δ must be positive".into()));
    }
    let mf = m as f64;
    let df = d as f64;
    let a = ((1.0 - delta / (1.0 + delta)).powf(-mf) - 1.0) * (1.0 + (mf - 1.0) / mf);
    let b = ((1.0 - 1.0 / (mf + 1.0)).powf(-df) - 1.0) * (1.0 + (df - 1.0) * delta);
    let c = 2f64.powf(df) * (1.0 - (df - 1.0) * delta / (1.0 + (df - 1.0) * delta)).powf(-mf) - 1.0;
    let rho = b;
    let beta = a.max(c);
    if !(df * delta < rho) {
        return Err(Error::ReductionParameters(format!(
            "Dδ = {} is not below ρ = {rho}; choose a smaller δ",
            df * delta
        )));
    }
    Ok((rho, beta))
}

/// Exhaustive scheduling decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    /// Best objective over all feasible schedules.
    pub max_objective: f64,
    /// A schedule attaining `max_objective` (lowest bitmask on ties).
    pub best_schedule: Vec<usize>,
    /// Best objective over feasible schedules with at most `D − 1` clauses.
    pub gamma_threshold: f64,
    pub gamma: f64,
    /// Whether some feasible schedule reaches `gamma`.
    pub answer: bool,
}

pub fn brute_force_decision(instance: &AbstractGainInstance) -> Result<Decision> {
    let n = instance.num_users();
    if n > ENUMERATION_CAP {
        return Err(Error::EnumerationCap { size: n, cap: ENUMERATION_CAP });
    }
    let d = instance.num_clauses();
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut threshold = f64::NEG_INFINITY;
    let mut schedule = Vec::with_capacity(n);
    for mask in 0u32..1 << n {
        schedule.clear();
        schedule.extend((0..n).filter(|&i| mask >> i & 1 == 1));
        let v = instance.evaluate(&schedule);
        if !v.feasible {
            continue;
        }
        if v.objective > best.0 {
            best = (v.objective, schedule.clone());
        }
        let clauses = schedule.iter().filter(|&&u| instance.is_clause_user(u)).count();
        if clauses < d && v.objective > threshold {
            threshold = v.objective;
        }
    }
    let gamma = threshold * (1.0 + GAMMA_BUMP);
    Ok(Decision {
        max_objective: best.0,
        best_schedule: best.1,
        gamma_threshold: threshold,
        gamma,
        answer: best.0 >= gamma,
    })
}

/// Modes shared between complementary literals.
const SHARED_MODES: usize = 10;
/// Modes owned by each literal user beyond the shared block.
const LITERAL_OWN_MODES: usize = 10;
/// Modes a clause borrows from each literal it does not contain.
const BORROWED_MODES: usize = 2;
const CLAUSE_OWN_MODES: usize = 10;

/// Covariances with the mode-sharing pattern of the instance: distinct
/// variables are orthogonal, complementary literals share modes, each clause
/// borrows a few modes from every literal it does not contain and clauses
/// are mutually orthogonal. Eigenvalues are one; `κ` scales are left to the
/// caller.
pub fn realize_covariances(f: &CnfFormula, num_antennas: usize) -> Result<Vec<CMatrix<f64>>> {
    let m = f.num_vars();
    let d = f.num_clauses();
    if d * BORROWED_MODES > LITERAL_OWN_MODES {
        return Err(Error::InvalidArgument(format!("at most {} clauses fit the mode pool", LITERAL_OWN_MODES / BORROWED_MODES)));
    }
    let needed = m * (SHARED_MODES + 2 * LITERAL_OWN_MODES) + d * CLAUSE_OWN_MODES;
    if needed > num_antennas {
        return Err(Error::InvalidArgument(format!("{needed} pool vectors needed, {num_antennas} antennas")));
    }
    let mut next = 0;
    let mut take = |k: usize| {
        let r: Vec<usize> = (next..next + k).collect();
        next += k;
        r
    };
    // Per literal user: modes it owns exclusively (clauses borrow from these).
    let mut own: Vec<Vec<usize>> = vec![Vec::new(); 2 * m];
    let mut modes: Vec<Vec<usize>> = vec![Vec::new(); 2 * m + d];
    for v in 0..m {
        let shared = take(SHARED_MODES);
        own[v] = take(LITERAL_OWN_MODES);
        own[m + v] = take(LITERAL_OWN_MODES);
        modes[v] = shared.iter().chain(&own[v]).copied().collect();
        modes[m + v] = shared.iter().chain(&own[m + v]).copied().collect();
    }
    for (j, clause) in f.clauses().iter().enumerate() {
        let members: BTreeSet<usize> = clause.iter().map(|&l| literal_user(m, l)).collect();
        let mut set = take(CLAUSE_OWN_MODES);
        for l in 0..2 * m {
            if !members.contains(&l) {
                set.extend_from_slice(&own[l][j * BORROWED_MODES..(j + 1) * BORROWED_MODES]);
            }
        }
        modes[2 * m + j] = set;
    }
    Ok(modes
        .into_iter()
        .map(|set| {
            let mut r = CMatrix::zeros(num_antennas, num_antennas);
            for i in set {
                r[(i, i)] = Complex::new(1.0, 0.0);
            }
            r
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn formula(m: usize, clauses: &[&[i32]]) -> CnfFormula {
        CnfFormula::new(m, clauses.iter().map(|c| c.to_vec()).collect()).unwrap()
    }

    #[test]
    fn irreducibility_rules() {
        assert!(formula(2, &[&[1, 2], &[-1, -2]]).is_irreducible());
        let one_sided = formula(2, &[&[1, 2], &[-1, 2]]);
        assert!(matches!(one_sided.check_irreducible(), Err(Error::ReducibleFormula(_))));
        let tautology = formula(1, &[&[1, -1], &[1], &[-1]]);
        assert!(matches!(tautology.check_irreducible(), Err(Error::ReducibleFormula(_))));
    }

    #[test]
    fn sat_oracle() {
        assert!(!formula(1, &[&[1], &[-1]]).sat_brute_force());
        assert!(formula(2, &[&[1, -2], &[-1, 2]]).sat_brute_force());
    }

    #[test]
    fn dimacs_round_trip() {
        let text = "c example\np cnf 3 2\n1 -2 0\n-1 2\n3 -3 0\n";
        let f = CnfFormula::parse_dimacs(text).unwrap();
        assert_eq!(f.clauses(), &[vec![-2, 1], vec![-3, -1, 2, 3]]);
        assert_eq!(CnfFormula::parse_dimacs(&f.to_dimacs()).unwrap(), f);
    }

    #[test]
    fn dimacs_errors_carry_line_numbers() {
        assert!(matches!(CnfFormula::parse_dimacs("1 2 0\n"), Err(Error::Dimacs { line: 1, .. })));
        assert!(matches!(CnfFormula::parse_dimacs("p cnf 2 1\n1 x 0\n"), Err(Error::Dimacs { line: 2, .. })));
        assert!(matches!(CnfFormula::parse_dimacs("p cnf 2 2\n1 2 0\n"), Err(Error::Dimacs { .. })));
        assert!(matches!(CnfFormula::parse_dimacs("p cnf 2 1\n3 0\n"), Err(Error::Dimacs { line: 2, .. })));
    }

    #[test]
    fn complementary_literals_block_each_other() {
        let f = formula(2, &[&[1, 2], &[-1, -2]]);
        let inst = build_instance(&f, 1.0, 5.0, 0.05).unwrap();
        assert_eq!(inst.num_users(), 6);
        let v = inst.evaluate(&[0, 2]);
        assert!(!v.feasible);
        assert_eq!(inst.sir(0, &[0, 2]), 1.0);
    }

    #[test]
    fn clause_with_one_foreign_literal() {
        // Clause 0 = x1 ∨ x2; scheduling x̄1 only interferes at 1/M.
        let f = formula(2, &[&[1, 2], &[-1, -2]]);
        let inst = build_instance(&f, 1.0, 5.0, 0.05).unwrap();
        let c = inst.clause_user(0);
        let m = 2.0;
        assert!((inst.sir(c, &[2, c]) - 5.0 / ((m - 1.0) / m)).abs() < 1e-12);
        assert!(inst.sir(c, &[2, c]) >= inst.alpha(c));
    }

    #[test]
    fn gain_structure() {
        let f = formula(2, &[&[1, 2], &[-1, -2]]);
        let inst = build_instance(&f, 2.0, 7.0, 0.1).unwrap();
        let c0 = inst.clause_user(0);
        assert_eq!(inst.gain(0, 0), 2.0);
        assert_eq!(inst.gain(0, 2), 2.0);
        assert_eq!(inst.gain(0, 1), 0.0);
        assert_eq!(inst.gain(c0, c0), 7.0);
        assert_eq!(inst.gain(0, c0), 0.0);
        assert_eq!(inst.gain(2, c0), 0.5);
        assert_eq!(inst.gain(c0, 2), 0.1);
        assert_eq!(inst.gain(c0, inst.clause_user(1)), 0.0);
        let p = inst.params();
        assert!((p.eps1 - (2.0 - 0.2) / 0.2).abs() < 1e-12);
        assert!((p.eps2 - 7.0).abs() < 1e-12);
    }

    #[test]
    fn empty_and_single_schedules() {
        let f = formula(2, &[&[1, 2], &[-1, -2]]);
        let inst = build_instance(&f, 1.5, 5.0, 0.05).unwrap();
        assert_eq!(inst.evaluate(&[]), ScheduleValue { objective: 0.0, feasible: true });
        let v = inst.evaluate(&[1]);
        assert!(v.feasible);
        assert!((v.objective - 2.5f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn parameter_guards() {
        assert!(feasible_params(1, 2, 0.05).is_err());
        let (rho, _) = feasible_params(3, 3, 0.05).unwrap();
        assert!(3.0 * 0.05 < rho);
        let f = formula(2, &[&[1, 2], &[-1, -2]]);
        assert!(matches!(build_instance(&f, 0.05, 1.0, 0.05), Err(Error::ReductionParameters(_))));
    }

    #[test]
    fn interference_free_limit_satisfies_lemmas() {
        for (m, d) in [(2, 2), (3, 3), (4, 1)] {
            assert!(lemma_conditions(1.0, 1.0, 1e-12, m, d).all());
        }
        assert!(!lemma_conditions(1e-3, 1e-3, 5.0, 3, 3).full_literals);
    }

    #[test]
    fn enumeration_cap() {
        let clauses: Vec<Vec<i32>> = (1..=9).map(|v| vec![v]).chain((1..=9).map(|v| vec![-v])).collect();
        let f = CnfFormula::new(9, clauses).unwrap();
        let inst = build_instance(&f, 10.0, 10.0, 0.01).unwrap();
        assert!(matches!(brute_force_decision(&inst), Err(Error::EnumerationCap { .. })));
    }

    #[test]
    fn realization_mode_pattern() {
        let f = formula(3, &[&[1, 2, 3], &[-1, -2], &[-3, 1]]);
        let covs = realize_covariances(&f, 128).unwrap();
        let overlap = |a: usize, b: usize| (0..128).any(|i| covs[a][(i, i)].re > 0.0 && covs[b][(i, i)].re > 0.0);
        let inst = build_instance(&f, 1.0, 5.0, 0.05).unwrap();
        for a in 0..covs.len() {
            for b in 0..covs.len() {
                if a != b {
                    assert_eq!(overlap(a, b), inst.gain(a, b) > 0.0, "users {a}, {b}");
                }
            }
        }
    }
}
