//! Primal-graph analysis: component decomposition, min-fill width and
//! branching-variable selection.

use std::collections::BTreeSet;

use crate::cnf::{probe_implied, Cnf, Lit};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decomposition {
    /// Probing exposed a conflict.
    Unsat,
    Split {
        /// Literals entailed by the input, ascending.
        implied: Vec<Lit>,
        /// Variable-disjoint residual components, ordered by smallest
        /// variable. Empty when the residual formula is true.
        components: Vec<Cnf>,
    },
}

/// Extracts implied literals, conditions on them and splits what is left
/// into connected components of the primal graph.
pub fn decompose(cnf: &Cnf) -> Decomposition {
    if cnf.is_false() {
        return Decomposition::Unsat;
    }
    let implied = match probe_implied(cnf) {
        Ok(lits) => lits,
        Err(_) => return Decomposition::Unsat,
    };
    let residual = cnf.condition(&implied);
    if residual.is_false() {
        return Decomposition::Unsat;
    }
    Decomposition::Split {
        implied,
        components: connected_components(&residual),
    }
}

/// Splits clauses into primal-graph components without any propagation.
pub fn connected_components(cnf: &Cnf) -> Vec<Cnf> {
    let vars = cnf.vars();
    if vars.is_empty() {
        return Vec::new();
    }
    let idx = |v: u32| vars.binary_search(&v).expect("var of cnf");
    let mut parent: Vec<usize> = (0..vars.len()).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for c in cnf.clauses() {
        let head = idx(c[0].var());
        for l in &c[1..] {
            let first = find(&mut parent, head);
            let r = find(&mut parent, idx(l.var()));
            if r != first {
                let (lo, hi) = if r < first { (r, first) } else { (first, r) };
                parent[hi] = lo;
            }
        }
    }
    // Roots are the smallest index of their set, so ascending root order is
    // ascending smallest variable.
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); vars.len()];
    for (i, c) in cnf.clauses().enumerate() {
        let r = find(&mut parent, idx(c[0].var()));
        groups[r].push(i);
    }
    groups
        .into_iter()
        .filter(|g| !g.is_empty())
        .map(|g| cnf.subset(&g))
        .collect()
}

fn primal_graph(cnf: &Cnf) -> Vec<BTreeSet<usize>> {
    let vars = cnf.vars();
    let idx = |v: u32| vars.binary_search(&v).expect("var of cnf");
    let mut adj = vec![BTreeSet::new(); vars.len()];
    for c in cnf.clauses() {
        for (i, a) in c.iter().enumerate() {
            for b in &c[i + 1..] {
                let (x, y) = (idx(a.var()), idx(b.var()));
                adj[x].insert(y);
                adj[y].insert(x);
            }
        }
    }
    adj
}

/// Width of the greedy min-fill elimination order on the primal graph, an
/// upper bound on treewidth. Ties go to the smallest variable.
pub fn minfill_width(cnf: &Cnf) -> usize {
    let mut adj = primal_graph(cnf);
    let n = adj.len();
    let mut alive = vec![true; n];
    let mut width = 0;
    let fill = |adj: &[BTreeSet<usize>], v: usize| -> usize {
        let nb: Vec<usize> = adj[v].iter().copied().collect();
        let mut missing = 0;
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                if !adj[a].contains(&b) {
                    missing += 1;
                }
            }
        }
        missing
    };
    for _ in 0..n {
        let mut best = None;
        let mut best_fill = usize::MAX;
        for v in 0..n {
            if !alive[v] {
                continue;
            }
            let f = fill(&adj, v);
            if f < best_fill {
                best_fill = f;
                best = Some(v);
                if f == 0 {
                    break;
                }
            }
        }
        let v = best.expect("a live vertex remains");
        let nb: Vec<usize> = adj[v].iter().copied().collect();
        width = width.max(nb.len());
        for (i, &a) in nb.iter().enumerate() {
            adj[a].remove(&v);
            for &b in &nb[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        adj[v].clear();
        alive[v] = false;
    }
    width
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarHeuristic {
    /// Most weighted occurrences; binary clauses count twice.
    #[default]
    Score,
    /// Smallest variable index.
    MinIndex,
}

/// Branching variable among `Vars(cnf)`, restricted to `restrict` (sorted)
/// when given. `None` if there is no candidate.
pub fn pick_good_var(cnf: &Cnf, restrict: Option<&[u32]>, heuristic: VarHeuristic) -> Option<u32> {
    let allowed = |v: u32| restrict.is_none_or(|r| r.binary_search(&v).is_ok());
    let vars = cnf.vars();
    match heuristic {
        VarHeuristic::MinIndex => vars.iter().copied().find(|&v| allowed(v)),
        VarHeuristic::Score => {
            let mut score = vec![0u64; vars.len()];
            for c in cnf.clauses() {
                let w = if c.len() == 2 { 2 } else { 1 };
                for l in c {
                    score[vars.binary_search(&l.var()).expect("var of cnf")] += w;
                }
            }
            let mut best: Option<(u32, u64)> = None;
            for (i, &v) in vars.iter().enumerate() {
                if allowed(v) && best.is_none_or(|(_, s)| score[i] > s) {
                    best = Some((v, score[i]));
                }
            }
            best.map(|(v, _)| v)
        }
    }
}
