//! Literal-equivalence canonicalization and kernel cores.
//!
//! A set of equivalences is kept in prime form: every pair is `x ↔ l` where
//! `x` is the smallest variable of its class (taken positively) and `l` is
//! another member of the class. Each non-representative variable appears in
//! exactly one pair.

use std::collections::HashMap;

use crate::cnf::{Cnf, Lit};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LitEquivSet {
    /// `(representative var, member literal)`, sorted by representative then
    /// member variable.
    pairs: Vec<(u32, Lit)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KernelError {
    #[error("equivalences force x{0} ↔ ¬x{0}")]
    Inconsistent(u32),
}

impl LitEquivSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn pairs(&self) -> &[(u32, Lit)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Variables eliminated by the substitution (the members' variables).
    pub fn eliminated_vars(&self) -> impl Iterator<Item = u32> + '_ {
        self.pairs.iter().map(|(_, l)| l.var())
    }

    /// The pairs as raw literal equivalences.
    pub fn to_raw(&self) -> Vec<(Lit, Lit)> {
        self.pairs.iter().map(|&(x, l)| (Lit::pos(x), l)).collect()
    }

    /// Replaces a non-representative literal by its representative,
    /// respecting polarity; other literals are returned unchanged.
    pub fn substitute(&self, l: Lit) -> Lit {
        match self.pairs.iter().find(|(_, m)| m.var() == l.var()) {
            Some(&(x, m)) => Lit::new(x, m.is_positive() == l.is_positive()),
            None => l,
        }
    }

    fn substitution_map(&self) -> HashMap<u32, Lit> {
        self.pairs
            .iter()
            .map(|&(x, m)| (m.var(), Lit::new(x, m.is_positive())))
            .collect()
    }
}

/// Computes the prime form of the closure of `raw` under transitivity and
/// negation symmetry.
pub fn prime_closure(raw: &[(Lit, Lit)]) -> Result<LitEquivSet, KernelError> {
    let mut vars: Vec<u32> = raw.iter().flat_map(|(a, b)| [a.var(), b.var()]).collect();
    vars.sort_unstable();
    vars.dedup();
    let index = |l: Lit| -> usize {
        let i = vars.binary_search(&l.var()).expect("collected");
        2 * i + usize::from(!l.is_positive())
    };
    let mut parent: Vec<usize> = (0..2 * vars.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let union = |parent: &mut Vec<usize>, a: usize, b: usize| {
        let (ra, rb) = (find(parent, a), find(parent, b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            parent[hi] = lo;
        }
    };
    for &(a, b) in raw {
        union(&mut parent, index(a), index(b));
        union(&mut parent, index(!a), index(!b));
    }
    for i in 0..vars.len() {
        if find(&mut parent, 2 * i) == find(&mut parent, 2 * i + 1) {
            return Err(KernelError::Inconsistent(vars[i]));
        }
    }
    // Literal indices ascend with the variable, so the first positive index
    // seen for a root belongs to the class minimum.
    let mut classes: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..2 * vars.len() {
        let r = find(&mut parent, i);
        classes.entry(r).or_default().push(i);
    }
    let mut pairs = Vec::new();
    for members in classes.values() {
        let min = members[0];
        if min % 2 == 1 || members.len() < 2 {
            continue;
        }
        let x = vars[min / 2];
        for &m in &members[1..] {
            pairs.push((x, Lit::new(vars[m / 2], m % 2 == 0)));
        }
    }
    pairs.sort_unstable_by_key(|&(x, l)| (x, l.var()));
    Ok(LitEquivSet { pairs })
}

/// Substitutes every non-representative literal by its representative and
/// renormalizes. The result mentions no eliminated variable.
pub fn construct_core(cnf: &Cnf, eq: &LitEquivSet) -> Cnf {
    if eq.is_empty() || cnf.is_false() {
        return cnf.clone();
    }
    let map = eq.substitution_map();
    let sub = |l: Lit| match map.get(&l.var()) {
        Some(&r) if l.is_positive() => r,
        Some(&r) => !r,
        None => l,
    };
    Cnf::new(
        cnf.num_vars(),
        cnf.clauses()
            .map(|c| c.iter().map(|&l| sub(l)).collect::<Vec<_>>()),
    )
}

/// Gate for attempting kernelization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig {
    /// Minimum fraction of binary clauses.
    pub ratio: f64,
    /// Kernelize only at decision depths divisible by this.
    pub period: u32,
    pub enabled: bool,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            ratio: 0.4,
            period: 4,
            enabled: true,
        }
    }
}

pub fn should_kernelize(cnf: &Cnf, depth: u32, cfg: &KernelConfig) -> bool {
    if !cfg.enabled || cnf.num_clauses() == 0 {
        return false;
    }
    let binary = cnf.num_binary_clauses();
    binary > 0
        && binary as f64 >= cfg.ratio * cnf.num_clauses() as f64
        && depth % cfg.period.max(1) == 0
}
