//! Unit propagation, a small DPLL decision procedure and failed-literal
//! probing.
//!
//! Everything here runs on a [`Propagator`], which renumbers the variables of
//! one formula densely so its tables are sized by the formula, not by the
//! global universe.

use super::{Cnf, Lit};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropStatus {
    Consistent,
    Conflict,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropResult {
    pub status: PropStatus,
    /// Literals forced by unit propagation, ascending by variable. Partial
    /// when `status` is `Conflict`.
    pub implied: Vec<Lit>,
}

/// Local literal code: `2 * index + negated`, where `index` is the position
/// of the variable in `Cnf::vars`.
type LocalLit = u32;

pub(crate) struct Propagator<'a> {
    cnf: &'a Cnf,
    local: Vec<LocalLit>,
    occ: Vec<Vec<u32>>,
    value: Vec<i8>,
    trail: Vec<LocalLit>,
    qhead: usize,
}

impl<'a> Propagator<'a> {
    pub(crate) fn new(cnf: &'a Cnf) -> Self {
        let n = cnf.vars.len();
        let local: Vec<LocalLit> = cnf
            .lits
            .iter()
            .map(|l| {
                let idx = cnf.vars.binary_search(&l.var()).expect("var in vars") as u32;
                idx << 1 | u32::from(!l.is_positive())
            })
            .collect();
        let mut occ = vec![Vec::new(); 2 * n];
        for c in 0..cnf.num_clauses() {
            for i in cnf.offsets[c]..cnf.offsets[c + 1] {
                occ[local[i as usize] as usize].push(c as u32);
            }
        }
        Propagator {
            cnf,
            local,
            occ,
            value: vec![0; n],
            trail: Vec::new(),
            qhead: 0,
        }
    }

    pub(crate) fn num_local_vars(&self) -> usize {
        self.value.len()
    }

    pub(crate) fn to_global(&self, l: LocalLit) -> Lit {
        Lit::new(self.cnf.vars[(l >> 1) as usize], l & 1 == 0)
    }

    pub(crate) fn to_local(&self, l: Lit) -> Option<LocalLit> {
        self.cnf
            .vars
            .binary_search(&l.var())
            .ok()
            .map(|i| (i as u32) << 1 | u32::from(!l.is_positive()))
    }

    fn lit_value(&self, l: LocalLit) -> i8 {
        let v = self.value[(l >> 1) as usize];
        if l & 1 == 0 {
            v
        } else {
            -v
        }
    }

    pub(crate) fn is_assigned(&self, var_index: usize) -> bool {
        self.value[var_index] != 0
    }

    fn enqueue(&mut self, l: LocalLit) -> bool {
        match self.lit_value(l) {
            1 => true,
            -1 => false,
            _ => {
                self.value[(l >> 1) as usize] = if l & 1 == 0 { 1 } else { -1 };
                self.trail.push(l);
                true
            }
        }
    }

    fn clause_range(&self, c: u32) -> std::ops::Range<usize> {
        self.cnf.offsets[c as usize] as usize..self.cnf.offsets[c as usize + 1] as usize
    }

    /// Runs propagation over the pending trail; false on conflict.
    fn propagate(&mut self) -> bool {
        while self.qhead < self.trail.len() {
            let falsified = self.trail[self.qhead] ^ 1;
            self.qhead += 1;
            for k in 0..self.occ[falsified as usize].len() {
                let c = self.occ[falsified as usize][k];
                let mut unassigned = None;
                let mut n_unassigned = 0;
                let mut satisfied = false;
                for i in self.clause_range(c) {
                    let m = self.local[i];
                    match self.lit_value(m) {
                        1 => {
                            satisfied = true;
                            break;
                        }
                        0 => {
                            n_unassigned += 1;
                            unassigned = Some(m);
                        }
                        _ => {}
                    }
                }
                if satisfied {
                    continue;
                }
                match (n_unassigned, unassigned) {
                    (0, _) => return false,
                    (1, Some(m)) => {
                        self.enqueue(m);
                    }
                    _ => {}
                }
            }
        }
        true
    }

    /// Root-level propagation of the unit clauses; false on conflict.
    pub(crate) fn init(&mut self) -> bool {
        if self.cnf.is_false() {
            return false;
        }
        for c in 0..self.cnf.num_clauses() as u32 {
            let r = self.clause_range(c);
            if r.len() == 1 && !self.enqueue(self.local[r.start]) {
                return false;
            }
        }
        self.propagate()
    }

    pub(crate) fn mark(&self) -> usize {
        self.trail.len()
    }

    pub(crate) fn undo(&mut self, mark: usize) {
        for &l in &self.trail[mark..] {
            self.value[(l >> 1) as usize] = 0;
        }
        self.trail.truncate(mark);
        self.qhead = mark;
    }

    /// Assigns `l` and propagates, keeping the result; false on conflict
    /// (the trail is then left as it was at the conflict).
    pub(crate) fn assign(&mut self, l: LocalLit) -> bool {
        self.enqueue(l) && self.propagate()
    }

    /// Literals forced by assuming `l` (including `l`), or `None` if the
    /// assumption propagates to a conflict. The state is restored.
    pub(crate) fn probe(&mut self, l: LocalLit) -> Option<Vec<LocalLit>> {
        let mark = self.mark();
        let ok = self.assign(l);
        let forced = ok.then(|| self.trail[mark..].to_vec());
        self.undo(mark);
        forced
    }

    pub(crate) fn trail_lits(&self) -> Vec<Lit> {
        let mut out: Vec<Lit> = self.trail.iter().map(|&l| self.to_global(l)).collect();
        out.sort_unstable();
        out
    }

    /// Unassigned variable with the most occurrences in clauses not yet
    /// satisfied; `None` if every clause is satisfied.
    fn pick_branch(&self) -> Option<usize> {
        let mut score = vec![0u32; self.num_local_vars()];
        let mut any = false;
        for c in 0..self.cnf.num_clauses() as u32 {
            let r = self.clause_range(c);
            if r.clone().any(|i| self.lit_value(self.local[i]) == 1) {
                continue;
            }
            any = true;
            for i in r {
                let m = self.local[i];
                if self.lit_value(m) == 0 {
                    score[(m >> 1) as usize] += 1;
                }
            }
        }
        if !any {
            return None;
        }
        let mut best = None;
        let mut best_score = 0;
        for (v, &s) in score.iter().enumerate() {
            if s > best_score {
                best = Some(v);
                best_score = s;
            }
        }
        best
    }

    fn dpll(&mut self) -> bool {
        let Some(v) = self.pick_branch() else {
            return true;
        };
        for neg in [0u32, 1] {
            let mark = self.mark();
            if self.assign((v as u32) << 1 | neg) && self.dpll() {
                return true;
            }
            self.undo(mark);
        }
        false
    }
}

/// Exhaustive unit propagation.
pub fn propagate(cnf: &Cnf) -> PropResult {
    let mut p = Propagator::new(cnf);
    let status = if p.init() {
        PropStatus::Consistent
    } else {
        PropStatus::Conflict
    };
    PropResult {
        status,
        implied: p.trail_lits(),
    }
}

/// Complete satisfiability check: DPLL with unit propagation, branching on
/// the most frequent variable of the unsatisfied clauses.
pub fn sat(cnf: &Cnf) -> bool {
    let mut p = Propagator::new(cnf);
    p.init() && p.dpll()
}

/// Failed-literal probing to a fixpoint. `Ok` holds the implied literals;
/// `Err` holds an assignment whose conditioning falsifies some clause, which
/// proves the formula unsatisfiable.
pub(crate) fn probe_implied(cnf: &Cnf) -> Result<Vec<Lit>, Vec<Lit>> {
    let mut p = Propagator::new(cnf);
    if !p.init() {
        return Err(p.trail_lits());
    }
    loop {
        let mut changed = false;
        for v in 0..p.num_local_vars() {
            for neg in [0u32, 1] {
                if p.is_assigned(v) {
                    break;
                }
                let l = (v as u32) << 1 | neg;
                if p.probe(l).is_none() {
                    changed = true;
                    if !p.assign(l ^ 1) {
                        return Err(p.trail_lits());
                    }
                }
            }
        }
        if !changed {
            return Ok(p.trail_lits());
        }
    }
}

/// Literals entailed by `cnf`, found by failed-literal probing (sound, not
/// complete). On an unsatisfiable input the returned set, used as a
/// conditioning, exposes a conflict.
pub fn implied_literals(cnf: &Cnf) -> Vec<Lit> {
    match probe_implied(cnf) {
        Ok(lits) | Err(lits) => lits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::tests::example_formula;

    fn cnf(nv: u32, clauses: &[&[i32]]) -> Cnf {
        Cnf::from_dimacs_clauses(nv, clauses)
    }

    #[test]
    fn test_chain_propagation() {
        let r = propagate(&cnf(2, &[&[1], &[-1, 2]]));
        assert_eq!(r.status, PropStatus::Consistent);
        assert_eq!(r.implied, vec![Lit::pos(1), Lit::pos(2)]);
    }

    #[test]
    fn test_direct_conflict() {
        assert_eq!(propagate(&cnf(1, &[&[1], &[-1]])).status, PropStatus::Conflict);
    }

    #[test]
    fn test_no_units() {
        let x1_true = example_formula().condition(&[Lit::pos(1)]);
        let r = propagate(&x1_true);
        assert_eq!(r.status, PropStatus::Consistent);
        assert!(r.implied.is_empty());
    }

    #[test]
    fn test_propagate_idempotent() {
        let c = cnf(4, &[&[1], &[-1, 2], &[-2, 3, 4]]);
        let r = propagate(&c);
        let again = propagate(&c.condition(&r.implied));
        assert!(again.implied.is_empty());
    }

    #[test]
    fn test_sat_basic() {
        assert!(sat(&Cnf::true_formula(3)));
        assert!(!sat(&cnf(1, &[&[1], &[-1]])));
        assert!(sat(&example_formula()));
        // pigeonhole 3 -> 2
        let php = cnf(
            6,
            &[&[1, 2], &[3, 4], &[5, 6], &[-1, -3], &[-1, -5], &[-3, -5], &[-2, -4], &[-2, -6], &[-4, -6]],
        );
        assert!(!sat(&php));
    }

    #[test]
    fn test_implied_literals() {
        assert_eq!(implied_literals(&cnf(2, &[&[1], &[1, 2]])), vec![Lit::pos(1)]);
        assert_eq!(implied_literals(&cnf(2, &[&[1, 2], &[1, -2]])), vec![Lit::pos(1)]);
        let x1_true = example_formula().condition(&[Lit::pos(1)]);
        assert!(implied_literals(&x1_true).is_empty());
    }

    #[test]
    fn test_implied_literals_unsat_exposes_conflict() {
        let c = cnf(2, &[&[1, 2], &[1, -2], &[-1, 2], &[-1, -2]]);
        let lits = implied_literals(&c);
        assert!(c.condition(&lits).is_false());
    }
}
