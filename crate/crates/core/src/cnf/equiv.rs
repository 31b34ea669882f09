//! Literal-equivalence detection.

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use super::{Cnf, Lit, Propagator};

/// Orients `a ↔ b` so the smaller variable comes first, positive.
fn canonical_pair(a: Lit, b: Lit) -> (Lit, Lit) {
    let (a, b) = if a.var() <= b.var() { (a, b) } else { (b, a) };
    if a.is_positive() {
        (a, b)
    } else {
        (!a, !b)
    }
}

/// Sound (not complete) set of literal equivalences entailed by `cnf`.
///
/// Two sources are combined: strongly connected components of the binary
/// implication graph, and probing both phases of every variable that occurs
/// in a binary clause (`x ↦ 1` forces `l` and `x ↦ 0` forces `¬l` gives
/// `x ↔ l`). Variables fixed by root-level propagation are skipped. Pairs
/// come back canonically oriented, sorted and unique; an unsatisfiable input
/// may produce a contradictory pair `x ↔ ¬x`.
pub fn detect_lit_equ(cnf: &Cnf) -> Vec<(Lit, Lit)> {
    let mut p = Propagator::new(cnf);
    if !p.init() {
        return Vec::new();
    }
    let n = p.num_local_vars();
    let mut pairs = Vec::new();

    let mut graph: DiGraph<(), ()> = DiGraph::with_capacity(2 * n, 0);
    for _ in 0..2 * n {
        graph.add_node(());
    }
    let mut in_binary = vec![false; n];
    for c in cnf.clauses() {
        if c.len() != 2 {
            continue;
        }
        let (Some(a), Some(b)) = (p.to_local(c[0]), p.to_local(c[1])) else {
            continue;
        };
        if p.is_assigned((a >> 1) as usize) || p.is_assigned((b >> 1) as usize) {
            continue;
        }
        in_binary[(a >> 1) as usize] = true;
        in_binary[(b >> 1) as usize] = true;
        graph.add_edge(NodeIndex::new((a ^ 1) as usize), NodeIndex::new(b as usize), ());
        graph.add_edge(NodeIndex::new((b ^ 1) as usize), NodeIndex::new(a as usize), ());
    }
    for scc in tarjan_scc(&graph) {
        if scc.len() < 2 {
            continue;
        }
        let mut lits: Vec<u32> = scc.iter().map(|ix| ix.index() as u32).collect();
        lits.sort_unstable();
        let rep = p.to_global(lits[0]);
        for &other in &lits[1..] {
            pairs.push(canonical_pair(rep, p.to_global(other)));
        }
    }

    let mut forced_false = vec![false; 2 * n];
    for v in 0..n {
        if !in_binary[v] || p.is_assigned(v) {
            continue;
        }
        let pos = (v as u32) << 1;
        let (Some(when_true), Some(when_false)) = (p.probe(pos), p.probe(pos | 1)) else {
            continue;
        };
        for &l in &when_false {
            forced_false[l as usize] = true;
        }
        for &l in &when_true {
            if l >> 1 != v as u32 && forced_false[(l ^ 1) as usize] {
                pairs.push(canonical_pair(p.to_global(pos), p.to_global(l)));
            }
        }
        for &l in &when_false {
            forced_false[l as usize] = false;
        }
    }

    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::tests::example_formula;

    #[test]
    fn test_two_clause_equivalence() {
        let c = Cnf::from_dimacs_clauses(2, &[&[-1, 2], &[1, -2]]);
        assert_eq!(detect_lit_equ(&c), vec![(Lit::pos(1), Lit::pos(2))]);
    }

    #[test]
    fn test_example_kernel_equivalence() {
        let x1_true = example_formula().condition(&[Lit::pos(1)]);
        assert_eq!(detect_lit_equ(&x1_true), vec![(Lit::pos(2), Lit::pos(5))]);
    }

    #[test]
    fn test_no_equivalence() {
        let c = Cnf::from_dimacs_clauses(2, &[&[1, 2]]);
        assert!(detect_lit_equ(&c).is_empty());
    }

    #[test]
    fn test_negative_equivalence_by_probing() {
        // x1 -> ¬x3 via a ternary chain, ¬x1 -> x3 directly
        let c = Cnf::from_dimacs_clauses(4, &[&[1, 3], &[-1, -2], &[2, -3, -1], &[-1, 4]]);
        let eqs = detect_lit_equ(&c);
        assert!(eqs.contains(&(Lit::pos(1), Lit::neg(3))), "{eqs:?}");
    }
}
