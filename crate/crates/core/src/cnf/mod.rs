//! CNF formulas over a fixed variable universe.
//!
//! A [`Cnf`] is kept in a canonical form: literals inside a clause are
//! sorted and unique, tautologies are dropped, the clause list is sorted and
//! deduplicated, and any empty clause collapses the formula to the canonical
//! false formula. Two syntactically equal clause sets therefore compare (and
//! hash) equal, which is what the component caches key on.

mod dimacs;
mod equiv;
mod propagate;

use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::Not;

pub use dimacs::{parse_dimacs, ParseError};
pub use equiv::detect_lit_equ;
pub use propagate::{implied_literals, propagate, sat, PropResult, PropStatus};
pub(crate) use propagate::{probe_implied, Propagator};

/// A literal, packed as `var << 1 | negated`. Variables start at 1.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: u32, positive: bool) -> Lit {
        assert!(var >= 1, "variables are numbered from 1");
        Lit(var << 1 | u32::from(!positive))
    }

    pub fn pos(var: u32) -> Lit {
        Lit::new(var, true)
    }

    pub fn neg(var: u32) -> Lit {
        Lit::new(var, false)
    }

    /// From a nonzero DIMACS integer.
    pub fn from_dimacs(v: i32) -> Lit {
        assert!(v != 0, "0 is not a literal");
        Lit::new(v.unsigned_abs(), v > 0)
    }

    pub fn to_dimacs(self) -> i32 {
        let v = self.var() as i32;
        if self.is_positive() {
            v
        } else {
            -v
        }
    }

    pub fn var(self) -> u32 {
        self.0 >> 1
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    pub fn code(self) -> u32 {
        self.0
    }
}

impl Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_positive() {
            write!(f, "x{}", self.var())
        } else {
            write!(f, "¬x{}", self.var())
        }
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// Clause database in canonical form. See the module docs.
#[derive(Clone)]
pub struct Cnf {
    num_vars: u32,
    lits: Vec<Lit>,
    /// Clause `i` is `lits[offsets[i]..offsets[i + 1]]`.
    offsets: Vec<u32>,
    /// Sorted variables occurring in some clause.
    vars: Vec<u32>,
}

impl Cnf {
    /// Builds a formula from arbitrary clauses, normalizing them.
    ///
    /// Panics if a literal mentions a variable above `num_vars`.
    pub fn new<I, C>(num_vars: u32, clauses: I) -> Cnf
    where
        I: IntoIterator<Item = C>,
        C: IntoIterator<Item = Lit>,
    {
        let mut out: Vec<Vec<Lit>> = Vec::new();
        for clause in clauses {
            let mut c: Vec<Lit> = clause.into_iter().collect();
            for l in &c {
                assert!(
                    l.var() <= num_vars,
                    "literal {l:?} exceeds the {num_vars} declared variables"
                );
            }
            c.sort_unstable();
            c.dedup();
            if c.windows(2).any(|w| w[0].var() == w[1].var()) {
                continue;
            }
            if c.is_empty() {
                return Cnf::false_formula(num_vars);
            }
            out.push(c);
        }
        Cnf::from_sorted_clauses(num_vars, out)
    }

    /// Convenience constructor from DIMACS-style integers.
    pub fn from_dimacs_clauses(num_vars: u32, clauses: &[&[i32]]) -> Cnf {
        Cnf::new(
            num_vars,
            clauses
                .iter()
                .map(|c| c.iter().map(|&v| Lit::from_dimacs(v)).collect::<Vec<_>>()),
        )
    }

    /// Clauses must each be sorted, duplicate-free, non-tautological and
    /// nonempty; only the clause list itself gets sorted here.
    pub(crate) fn from_sorted_clauses(num_vars: u32, mut clauses: Vec<Vec<Lit>>) -> Cnf {
        clauses.sort_unstable();
        clauses.dedup();
        let mut lits = Vec::with_capacity(clauses.iter().map(Vec::len).sum());
        let mut offsets = Vec::with_capacity(clauses.len() + 1);
        offsets.push(0);
        for c in &clauses {
            lits.extend_from_slice(c);
            offsets.push(lits.len() as u32);
        }
        let mut vars: Vec<u32> = lits.iter().map(|l| l.var()).collect();
        vars.sort_unstable();
        vars.dedup();
        Cnf {
            num_vars,
            lits,
            offsets,
            vars,
        }
    }

    /// The canonical unsatisfiable formula: a single empty clause.
    pub fn false_formula(num_vars: u32) -> Cnf {
        Cnf {
            num_vars,
            lits: Vec::new(),
            offsets: vec![0, 0],
            vars: Vec::new(),
        }
    }

    pub fn true_formula(num_vars: u32) -> Cnf {
        Cnf {
            num_vars,
            lits: Vec::new(),
            offsets: vec![0],
            vars: Vec::new(),
        }
    }

    /// Size of the variable universe X.
    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn clause(&self, i: usize) -> &[Lit] {
        &self.lits[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    pub fn clauses(&self) -> impl ExactSizeIterator<Item = &[Lit]> + '_ {
        (0..self.num_clauses()).map(move |i| self.clause(i))
    }

    /// Variables occurring in the clauses, ascending.
    pub fn vars(&self) -> &[u32] {
        &self.vars
    }

    pub fn contains_var(&self, var: u32) -> bool {
        self.vars.binary_search(&var).is_ok()
    }

    pub fn is_false(&self) -> bool {
        self.num_clauses() == 1 && self.offsets[1] == 0
    }

    pub fn is_true(&self) -> bool {
        self.num_clauses() == 0
    }

    pub fn num_binary_clauses(&self) -> usize {
        self.clauses().filter(|c| c.len() == 2).count()
    }

    /// Substitutes each literal in `lits` by true. The variable universe is
    /// unchanged, so counts of the result stay normalized over the same X.
    pub fn condition(&self, lits: &[Lit]) -> Cnf {
        if lits.is_empty() || self.is_false() {
            return self.clone();
        }
        let mut assigned: Vec<Lit> = lits.to_vec();
        assigned.sort_unstable_by_key(|l| l.var());
        let value = |l: Lit| -> Option<bool> {
            assigned
                .binary_search_by_key(&l.var(), |a| a.var())
                .ok()
                .map(|i| assigned[i] == l)
        };
        let mut out = Vec::with_capacity(self.num_clauses());
        'clauses: for c in self.clauses() {
            let mut kept = Vec::with_capacity(c.len());
            for &l in c {
                match value(l) {
                    Some(true) => continue 'clauses,
                    Some(false) => {}
                    None => kept.push(l),
                }
            }
            if kept.is_empty() {
                return Cnf::false_formula(self.num_vars);
            }
            out.push(kept);
        }
        Cnf::from_sorted_clauses(self.num_vars, out)
    }

    /// Keeps only the clauses whose indices are listed.
    pub(crate) fn subset(&self, indices: &[usize]) -> Cnf {
        let clauses = indices.iter().map(|&i| self.clause(i).to_vec()).collect();
        Cnf::from_sorted_clauses(self.num_vars, clauses)
    }

    /// Evaluates the formula under a total assignment (`assignment[v]` for
    /// variable `v`; index 0 unused).
    pub fn eval(&self, assignment: &[bool]) -> bool {
        self.clauses().all(|c| {
            c.iter()
                .any(|l| assignment[l.var() as usize] == l.is_positive())
        })
    }

    pub fn to_dimacs(&self) -> String {
        let mut s = format!("p cnf {} {}\n", self.num_vars, self.num_clauses());
        for c in self.clauses() {
            for l in c {
                s.push_str(&l.to_dimacs().to_string());
                s.push(' ');
            }
            s.push_str("0\n");
        }
        s
    }
}

impl PartialEq for Cnf {
    fn eq(&self, other: &Cnf) -> bool {
        self.num_vars == other.num_vars
            && self.offsets == other.offsets
            && self.lits == other.lits
    }
}

impl Eq for Cnf {}

impl Hash for Cnf {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.num_vars.hash(state);
        self.offsets.hash(state);
        self.lits.hash(state);
    }
}

impl fmt::Debug for Cnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_false() {
            return write!(f, "Cnf[{}](false)", self.num_vars);
        }
        write!(f, "Cnf[{}](", self.num_vars)?;
        for (i, c) in self.clauses().enumerate() {
            if i > 0 {
                write!(f, " ∧ ")?;
            }
            write!(f, "(")?;
            for (j, l) in c.iter().enumerate() {
                if j > 0 {
                    write!(f, " ∨ ")?;
                }
                write!(f, "{l:?}")?;
            }
            write!(f, ")")?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// The running example: (x1∨x3∨x5∨¬x7) ∧ (x4∨x6) ∧ (¬x2∨x4) ∧
    /// (¬x1∨¬x2∨x5) ∧ (¬x1∨x2∨¬x5).
    pub(crate) fn example_formula() -> Cnf {
        Cnf::from_dimacs_clauses(
            7,
            &[&[1, 3, 5, -7], &[4, 6], &[-2, 4], &[-1, -2, 5], &[-1, 2, -5]],
        )
    }

    #[test]
    fn test_lit_negation_involution() {
        let l = Lit::new(5, false);
        assert_eq!(!!l, l);
        assert_eq!((!l).var(), l.var());
        assert_eq!(l.to_dimacs(), -5);
        assert_eq!(Lit::from_dimacs(-5), l);
    }

    #[test]
    fn test_normalization() {
        let c = Cnf::from_dimacs_clauses(3, &[&[2, 1, 2], &[1, -1], &[1, 2]]);
        assert_eq!(c.num_clauses(), 1);
        assert_eq!(c.clause(0), &[Lit::pos(1), Lit::pos(2)]);
        assert_eq!(c.vars(), &[1, 2]);
        let f = Cnf::from_dimacs_clauses(3, &[&[1], &[]]);
        assert!(f.is_false());
    }

    #[test]
    fn test_condition_positive_branch() {
        let x1_true = example_formula().condition(&[Lit::pos(1)]);
        let expected =
            Cnf::from_dimacs_clauses(7, &[&[4, 6], &[-2, 4], &[-2, 5], &[2, -5]]);
        assert_eq!(x1_true, expected);
    }

    #[test]
    fn test_condition_negative_branch() {
        let x1_false = example_formula().condition(&[Lit::neg(1)]);
        let expected = Cnf::from_dimacs_clauses(7, &[&[3, 5, -7], &[4, 6], &[-2, 4]]);
        assert_eq!(x1_false, expected);
    }

    #[test]
    fn test_condition_identity_and_false() {
        let formula = example_formula();
        assert_eq!(formula.condition(&[]), formula);
        let c = Cnf::from_dimacs_clauses(2, &[&[1, 2]]);
        assert!(c.condition(&[Lit::neg(1), Lit::neg(2)]).is_false());
        assert!(c.condition(&[Lit::pos(2)]).is_true());
        assert_eq!(c.condition(&[Lit::pos(2)]).num_vars(), 2);
    }

    #[test]
    fn test_condition_compose() {
        let formula = example_formula();
        let a = [Lit::neg(2)];
        let b = [Lit::pos(5)];
        assert_eq!(
            formula.condition(&a).condition(&b),
            formula.condition(&[Lit::neg(2), Lit::pos(5)])
        );
    }
}
