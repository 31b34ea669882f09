//! Partial CCDD store: node arena, component cache and the three count
//! evaluations (exact, deterministic bounds, unbiased estimate).
//!
//! All counts are normalized over the global universe X: a node stands for a
//! formula over X, and `True` counts `2^|X|`.
//!
//! Nodes are refined in place when the sampler revisits them (an `Unknown`
//! child slot gets filled, frequencies grow, a subtree is swapped for its
//! collapsed `Known` form), so a child id may be larger than its parent's.
//! Evaluation is therefore a memoized depth-first walk.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::sync::Arc;

use crate::cnf::Cnf;
use crate::count::Count;
use crate::kernel::LitEquivSet;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeId(u32);

impl NodeId {
    pub const FALSE: NodeId = NodeId(0);
    pub const TRUE: NodeId = NodeId(1);
    pub const UNKNOWN: NodeId = NodeId(2);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    False,
    True,
    Unknown,
    Known {
        count: Count,
        /// Variables the count ranges over, for disjointness checks.
        scope: Vec<u32>,
    },
    Decision {
        var: u32,
        lo: NodeId,
        hi: NodeId,
        /// Probability of the high branch.
        p1: Count,
        /// Visit frequencies of the low and high branch.
        f: [u64; 2],
    },
    DecompAnd {
        children: Vec<NodeId>,
    },
    KernelAnd {
        core: NodeId,
        equivs: LitEquivSet,
    },
}

impl Node {
    pub fn kind(&self) -> &'static str {
        match self {
            Node::False => "false",
            Node::True => "true",
            Node::Unknown => "unknown",
            Node::Known { .. } => "known",
            Node::Decision { .. } => "decision",
            Node::DecompAnd { .. } => "decomp",
            Node::KernelAnd { .. } => "kernel",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PccddError {
    #[error("probability {0} outside [0, 1]")]
    Probability(Count),
    #[error("branch {branch} has probability 0 but is not the false leaf")]
    ZeroProbabilityBranch { branch: usize },
    #[error("branch {branch}: frequency {freq} does not match its child kind `{kind}`")]
    Frequency { branch: usize, freq: u64, kind: &'static str },
    #[error("decision with no recorded samples")]
    NoSamples,
    #[error("decomposed conjunction needs at least two children, got {0}")]
    DecompArity(usize),
    #[error("decomposed conjunction child of kind `{0}` is not allowed")]
    DecompChild(&'static str),
    #[error("decomposed conjunction children share variable x{0}")]
    DecompOverlap(u32),
    #[error("kernelized conjunction without equivalences")]
    KernelEmpty,
    #[error("kernelized conjunction core must not be unknown")]
    KernelUnknownCore,
    #[error("eliminated variable x{0} occurs in the core")]
    KernelVarInCore(u32),
    #[error("decision variable x{0} repeats below itself")]
    ReadOnce(u32),
    #[error("unknown node reached during exact evaluation")]
    ContainsUnknown,
    #[error("node {0:?} still has unknown descendants")]
    NotCollapsible(NodeId),
    #[error("no such node {0:?}")]
    Dangling(NodeId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundMode {
    Lower,
    Upper,
}

#[derive(Clone, Debug)]
pub struct PccddStore {
    num_vars: u32,
    nodes: Vec<Node>,
    /// Number of root-to-`Unknown` paths below each node, refreshed from the
    /// children whenever the node is built or touched. Zero is exact; a
    /// positive value may be stale after a shared descendant was refined.
    unknowns: Vec<u64>,
    cache: HashMap<Arc<Cnf>, NodeId>,
    inverse: HashMap<NodeId, Arc<Cnf>>,
    verify: bool,
}

impl PccddStore {
    pub fn new(num_vars: u32) -> Self {
        PccddStore {
            num_vars,
            nodes: vec![Node::False, Node::True, Node::Unknown],
            unknowns: vec![0, 0, 1],
            cache: HashMap::new(),
            inverse: HashMap::new(),
            verify: false,
        }
    }

    /// Turns on the structural checks that walk whole subdiagrams
    /// (disjointness, read-once, kernel variable absence).
    pub fn with_verification(mut self, on: bool) -> Self {
        self.verify = on;
        self
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() <= 3
    }

    pub fn cache_len(&self) -> usize {
        self.cache.len()
    }

    /// Nodes plus cache entries, the quantity held against the memory budget.
    pub fn footprint(&self) -> usize {
        self.nodes.len() + self.cache.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (NodeId(i as u32), n))
    }

    fn push(&mut self, node: Node) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(node);
        self.unknowns.push(0);
        self.refresh(id);
        id
    }

    fn check(&self, id: NodeId) -> Result<(), PccddError> {
        if id.index() < self.nodes.len() {
            Ok(())
        } else {
            Err(PccddError::Dangling(id))
        }
    }

    /// Recomputes the unknown-path counter of `id` from its children.
    pub fn refresh(&mut self, id: NodeId) {
        let u = |c: &NodeId| self.unknowns[c.index()];
        let value = match &self.nodes[id.index()] {
            Node::Unknown => 1,
            Node::False | Node::True | Node::Known { .. } => 0,
            Node::Decision { lo, hi, .. } => u(lo).saturating_add(u(hi)),
            Node::DecompAnd { children } => children.iter().map(u).fold(0u64, u64::saturating_add),
            Node::KernelAnd { core, .. } => u(core),
        };
        self.unknowns[id.index()] = value;
    }

    pub fn has_unknown(&self, id: NodeId) -> bool {
        self.unknowns[id.index()] > 0
    }

    /// Exact check by walking the subdiagram.
    pub fn has_unknown_exact(&self, id: NodeId) -> bool {
        let mut seen = HashSet::new();
        let mut stack = vec![id];
        while let Some(v) = stack.pop() {
            if self.unknowns[v.index()] == 0 || !seen.insert(v) {
                continue;
            }
            match &self.nodes[v.index()] {
                Node::Unknown => return true,
                Node::Decision { lo, hi, .. } => stack.extend([*lo, *hi]),
                Node::DecompAnd { children } => stack.extend(children.iter().copied()),
                Node::KernelAnd { core, .. } => stack.push(*core),
                _ => {}
            }
        }
        false
    }

    pub fn mk_known(&mut self, count: Count, scope: Vec<u32>) -> NodeId {
        self.push(Node::Known { count, scope })
    }

    pub fn mk_decision(
        &mut self,
        var: u32,
        lo: NodeId,
        hi: NodeId,
        p1: Count,
        f: [u64; 2],
    ) -> Result<NodeId, PccddError> {
        self.check(lo)?;
        self.check(hi)?;
        self.check_decision(var, [lo, hi], &p1, f)?;
        Ok(self.push(Node::Decision { var, lo, hi, p1, f }))
    }

    fn check_decision(
        &self,
        var: u32,
        children: [NodeId; 2],
        p1: &Count,
        f: [u64; 2],
    ) -> Result<(), PccddError> {
        if *p1 > Count::one() {
            return Err(PccddError::Probability(p1.clone()));
        }
        let p = [p1.complement(), p1.clone()];
        if f[0] == 0 && f[1] == 0 {
            return Err(PccddError::NoSamples);
        }
        for b in 0..2 {
            let child = self.node(children[b]);
            if p[b].is_zero() && *child != Node::False {
                return Err(PccddError::ZeroProbabilityBranch { branch: b });
            }
            let unsampled_ok = matches!(child, Node::Unknown | Node::False);
            if (f[b] == 0 && !unsampled_ok) || (f[b] > 0 && *child == Node::Unknown) {
                return Err(PccddError::Frequency {
                    branch: b,
                    freq: f[b],
                    kind: child.kind(),
                });
            }
        }
        if self.verify {
            for c in children {
                if self.vars_of(c).contains(&var) {
                    return Err(PccddError::ReadOnce(var));
                }
            }
        }
        Ok(())
    }

    pub fn mk_decomp(&mut self, children: Vec<NodeId>) -> Result<NodeId, PccddError> {
        if children.len() < 2 {
            return Err(PccddError::DecompArity(children.len()));
        }
        for &c in &children {
            self.check(c)?;
            match self.node(c) {
                Node::Unknown | Node::False | Node::True => {
                    return Err(PccddError::DecompChild(self.node(c).kind()))
                }
                _ => {}
            }
        }
        if self.verify {
            let mut seen = HashSet::new();
            for &c in &children {
                for v in self.vars_of(c) {
                    if !seen.insert(v) {
                        return Err(PccddError::DecompOverlap(v));
                    }
                }
            }
        }
        Ok(self.push(Node::DecompAnd { children }))
    }

    pub fn mk_kernel(&mut self, core: NodeId, equivs: LitEquivSet) -> Result<NodeId, PccddError> {
        self.check(core)?;
        if equivs.is_empty() {
            return Err(PccddError::KernelEmpty);
        }
        if *self.node(core) == Node::Unknown {
            return Err(PccddError::KernelUnknownCore);
        }
        if self.verify {
            let core_vars = self.vars_of(core);
            if let Some(v) = equivs.eliminated_vars().find(|v| core_vars.contains(v)) {
                return Err(PccddError::KernelVarInCore(v));
            }
        }
        Ok(self.push(Node::KernelAnd { core, equivs }))
    }

    /// Rebinds child `branch` of a decision. The frequencies are left alone.
    pub fn set_decision_child(&mut self, id: NodeId, branch: usize, child: NodeId) -> Result<(), PccddError> {
        self.check(child)?;
        let Node::Decision { var, lo, hi, p1, f } = self.node(id).clone() else {
            panic!("{id:?} is not a decision");
        };
        let mut ch = [lo, hi];
        ch[branch] = child;
        self.check_decision(var, ch, &p1, f)?;
        if let Node::Decision { lo, hi, .. } = &mut self.nodes[id.index()] {
            *lo = ch[0];
            *hi = ch[1];
        }
        self.refresh(id);
        Ok(())
    }

    /// Records one more sample of `branch`.
    pub fn bump_frequency(&mut self, id: NodeId, branch: usize) {
        let Node::Decision { f, .. } = &mut self.nodes[id.index()] else {
            panic!("{id:?} is not a decision");
        };
        f[branch] += 1;
    }

    pub fn set_decomp_child(&mut self, id: NodeId, i: usize, child: NodeId) -> Result<(), PccddError> {
        self.check(child)?;
        match self.node(child) {
            Node::Unknown | Node::True => return Err(PccddError::DecompChild(self.node(child).kind())),
            _ => {}
        }
        let Node::DecompAnd { children } = &mut self.nodes[id.index()] else {
            panic!("{id:?} is not a decomposed conjunction");
        };
        children[i] = child;
        self.refresh(id);
        Ok(())
    }

    pub fn set_kernel_core(&mut self, id: NodeId, core: NodeId) -> Result<(), PccddError> {
        self.check(core)?;
        if *self.node(core) == Node::Unknown {
            return Err(PccddError::KernelUnknownCore);
        }
        let Node::KernelAnd { core: slot, .. } = &mut self.nodes[id.index()] else {
            panic!("{id:?} is not a kernelized conjunction");
        };
        *slot = core;
        self.refresh(id);
        Ok(())
    }

    pub fn lookup(&self, cnf: &Cnf) -> Option<NodeId> {
        self.cache.get(cnf).copied()
    }

    pub fn formula_of(&self, id: NodeId) -> Option<&Arc<Cnf>> {
        self.inverse.get(&id)
    }

    /// Binds `cnf` to `id` in the cache and its inverse.
    pub fn insert_cache(&mut self, cnf: Arc<Cnf>, id: NodeId) {
        if let Some(old) = self.cache.insert(cnf.clone(), id) {
            self.inverse.remove(&old);
        }
        self.inverse.insert(id, cnf);
    }

    /// Drops every node and cache entry.
    pub fn clear(&mut self) {
        *self = PccddStore::new(self.num_vars).with_verification(self.verify);
    }

    /// Replaces an unknown-free subdiagram by a `Known` node holding its
    /// exact count and rebinds the cache entry of `id`, if any.
    pub fn collapse_known(&mut self, id: NodeId) -> Result<NodeId, PccddError> {
        match self.node(id) {
            Node::Known { .. } | Node::False | Node::True => return Ok(id),
            _ => {}
        }
        if self.has_unknown_exact(id) {
            return Err(PccddError::NotCollapsible(id));
        }
        let count = self.count_full(id)?;
        let mut scope: Vec<u32> = self.vars_of(id).into_iter().collect();
        scope.sort_unstable();
        let known = self.mk_known(count, scope);
        if let Some(cnf) = self.inverse.remove(&id) {
            self.insert_cache(cnf, known);
        }
        Ok(known)
    }

    /// Variables mentioned anywhere below `id`.
    pub fn vars_of(&self, id: NodeId) -> HashSet<u32> {
        let mut out = HashSet::new();
        let mut seen = HashSet::new();
        let mut stack = vec![id];
        while let Some(v) = stack.pop() {
            if !seen.insert(v) {
                continue;
            }
            match &self.nodes[v.index()] {
                Node::Known { scope, .. } => out.extend(scope.iter().copied()),
                Node::Decision { var, lo, hi, .. } => {
                    out.insert(*var);
                    stack.extend([*lo, *hi]);
                }
                Node::DecompAnd { children } => stack.extend(children.iter().copied()),
                Node::KernelAnd { core, equivs } => {
                    for &(x, l) in equivs.pairs() {
                        out.insert(x);
                        out.insert(l.var());
                    }
                    stack.push(*core);
                }
                _ => {}
            }
        }
        out
    }

    /// Re-runs every construction check on the subdiagram below `root`,
    /// including the walking ones, regardless of the verification flag.
    pub fn validate(&self, root: NodeId) -> Result<(), PccddError> {
        let mut deep = self.clone();
        deep.verify = true;
        let mut seen = HashSet::new();
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            if !seen.insert(v) {
                continue;
            }
            match deep.node(v).clone() {
                Node::Decision { var, lo, hi, p1, f } => {
                    deep.check_decision(var, [lo, hi], &p1, f)?;
                    stack.extend([lo, hi]);
                }
                Node::DecompAnd { children } => {
                    let mut vars = HashSet::new();
                    for &c in &children {
                        if matches!(deep.node(c), Node::Unknown | Node::True) {
                            return Err(PccddError::DecompChild(deep.node(c).kind()));
                        }
                        for x in deep.vars_of(c) {
                            if !vars.insert(x) {
                                return Err(PccddError::DecompOverlap(x));
                            }
                        }
                    }
                    stack.extend(children);
                }
                Node::KernelAnd { core, equivs } => {
                    if equivs.is_empty() {
                        return Err(PccddError::KernelEmpty);
                    }
                    if *deep.node(core) == Node::Unknown {
                        return Err(PccddError::KernelUnknownCore);
                    }
                    let core_vars = deep.vars_of(core);
                    if let Some(x) = equivs.eliminated_vars().find(|x| core_vars.contains(x)) {
                        return Err(PccddError::KernelVarInCore(x));
                    }
                    stack.push(core);
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn evaluate(&self, root: NodeId, mode: &Eval) -> Result<Count, PccddError> {
        let mut memo: HashMap<NodeId, (Count, bool)> = HashMap::new();
        self.eval_rec(root, mode, &mut memo).map(|(c, _)| c)
    }

    /// Value of `id` and whether its subdiagram is free of `Unknown`.
    fn eval_rec(
        &self,
        id: NodeId,
        mode: &Eval,
        memo: &mut HashMap<NodeId, (Count, bool)>,
    ) -> Result<(Count, bool), PccddError> {
        if let Some(hit) = memo.get(&id) {
            return Ok(hit.clone());
        }
        let x = u64::from(self.num_vars);
        let result = match &self.nodes[id.index()] {
            Node::False => (Count::zero(), true),
            Node::True => (Count::pow2(x), true),
            Node::Known { count, .. } => (count.clone(), true),
            Node::Unknown => match mode {
                Eval::Full | Eval::Estimate => return Err(PccddError::ContainsUnknown),
                Eval::Bound(v) => (v.clone(), false),
            },
            Node::Decision { lo, hi, p1, f, .. } => {
                let estimating = matches!(mode, Eval::Estimate);
                let mut z = [Count::zero(), Count::zero()];
                let mut exact = true;
                for (b, child) in [*lo, *hi].into_iter().enumerate() {
                    if estimating && *self.node(child) == Node::Unknown {
                        exact = false;
                        continue;
                    }
                    let (v, e) = self.eval_rec(child, mode, memo)?;
                    z[b] = v;
                    exact &= e;
                }
                let [zl, zh] = z;
                if estimating && !exact {
                    let total = f[0] + f[1];
                    if total == 0 {
                        return Err(PccddError::NoSamples);
                    }
                    let p = [p1.complement(), p1.clone()];
                    let z = [zl, zh];
                    let mut sum = Count::zero();
                    for b in 0..2 {
                        if f[b] > 0 && !p[b].is_zero() {
                            let den = &p[b] * &Count::from_u64(2 * total);
                            sum = sum + &z[b] * &Count::from_u64(f[b]) / den;
                        }
                    }
                    (sum, false)
                } else {
                    ((zl + zh).div_pow2(1), exact)
                }
            }
            Node::DecompAnd { children } => {
                let mut prod = Count::one();
                let mut exact = true;
                for &c in children {
                    let (z, e) = self.eval_rec(c, mode, memo)?;
                    exact &= e;
                    prod = prod * z;
                }
                let m = children.len() as u64;
                (prod.div_pow2((m - 1) * x), exact)
            }
            Node::KernelAnd { core, equivs } => {
                let (z, e) = self.eval_rec(*core, mode, memo)?;
                (z.div_pow2(equivs.len() as u64), e)
            }
        };
        memo.insert(id, result.clone());
        Ok(result)
    }

    /// Exact count of a subdiagram without `Unknown` nodes.
    pub fn count_full(&self, root: NodeId) -> Result<Count, PccddError> {
        self.evaluate(root, &Eval::Full)
    }

    /// Deterministic bound: `Unknown` is read as `unknown_value`, which
    /// defaults to 0 for the lower and `2^|X|` for the upper bound.
    pub fn bound(&self, root: NodeId, mode: BoundMode, unknown_value: Option<Count>) -> Count {
        let v = unknown_value.unwrap_or_else(|| match mode {
            BoundMode::Lower => Count::zero(),
            BoundMode::Upper => Count::pow2(u64::from(self.num_vars)),
        });
        self.evaluate(root, &Eval::Bound(v))
            .expect("bounds evaluate every node kind")
    }

    /// Unbiased estimate. Subdiagrams without `Unknown` evaluate exactly;
    /// elsewhere a decision reweights its sampled branches by frequency over
    /// probability.
    pub fn estimate(&self, root: NodeId) -> Result<Count, PccddError> {
        self.evaluate(root, &Eval::Estimate)
    }

    /// Graphviz rendering of the subdiagram below `root`.
    pub fn to_dot(&self, root: NodeId) -> String {
        let mut out = String::from("digraph pccdd {\n  node [fontname=\"Helvetica\"];\n");
        let mut seen = HashSet::new();
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            if !seen.insert(v) {
                continue;
            }
            let n = v.index();
            match &self.nodes[n] {
                Node::False => writeln!(out, "  n{n} [label=\"⊥\", shape=box];").unwrap(),
                Node::True => writeln!(out, "  n{n} [label=\"⊤\", shape=box];").unwrap(),
                Node::Unknown => writeln!(out, "  n{n} [label=\"?\", shape=box];").unwrap(),
                Node::Known { count, .. } => {
                    writeln!(out, "  n{n} [label=\"{count}\", shape=box];").unwrap()
                }
                Node::Decision { var, lo, hi, p1, f } => {
                    writeln!(out, "  n{n} [label=\"x{var}\", shape=circle];").unwrap();
                    let p0 = p1.complement();
                    writeln!(out, "  n{n} -> n{} [style=dashed, label=\"{p0}, {}\"];", lo.index(), f[0]).unwrap();
                    writeln!(out, "  n{n} -> n{} [label=\"{p1}, {}\"];", hi.index(), f[1]).unwrap();
                    stack.extend([*lo, *hi]);
                }
                Node::DecompAnd { children } => {
                    writeln!(out, "  n{n} [label=\"∧d\", shape=circle];").unwrap();
                    for c in children {
                        writeln!(out, "  n{n} -> n{};", c.index()).unwrap();
                    }
                    stack.extend(children.iter().copied());
                }
                Node::KernelAnd { core, equivs } => {
                    let eq: Vec<String> = equivs
                        .pairs()
                        .iter()
                        .map(|(x, l)| format!("x{x}↔{l:?}"))
                        .collect();
                    writeln!(out, "  n{n} [label=\"∧k {}\", shape=circle];", eq.join(" ")).unwrap();
                    writeln!(out, "  n{n} -> n{} [label=\"core\"];", core.index()).unwrap();
                    stack.push(*core);
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

enum Eval {
    Full,
    Bound(Count),
    Estimate,
}

/// Whether the partial diagram at `part` is a part of the full diagram at
/// `full`: `Unknown` matches anything, `Known` matches any node with the
/// same count, and inner nodes must agree in kind, variable and
/// equivalences with children matched pairwise (one-to-one for decomposed
/// conjunctions).
pub fn is_part_of(ps: &PccddStore, part: NodeId, fs: &PccddStore, full: NodeId) -> bool {
    let mut m = PartMatcher {
        ps,
        fs,
        memo: HashMap::new(),
        counts: HashMap::new(),
    };
    m.matches(part, full)
}

struct PartMatcher<'a> {
    ps: &'a PccddStore,
    fs: &'a PccddStore,
    memo: HashMap<(NodeId, NodeId), bool>,
    counts: HashMap<NodeId, Option<Count>>,
}

impl PartMatcher<'_> {
    fn full_count(&mut self, id: NodeId) -> Option<Count> {
        if let Some(c) = self.counts.get(&id) {
            return c.clone();
        }
        let c = self.fs.count_full(id).ok();
        self.counts.insert(id, c.clone());
        c
    }

    fn matches(&mut self, p: NodeId, f: NodeId) -> bool {
        if let Some(&hit) = self.memo.get(&(p, f)) {
            return hit;
        }
        let r = match (self.ps.node(p), self.fs.node(f)) {
            (Node::Unknown, _) => true,
            (Node::Known { count, .. }, _) => self.full_count(f).as_ref() == Some(count),
            (Node::False, Node::False) | (Node::True, Node::True) => true,
            (
                Node::Decision { var: v1, lo: l1, hi: h1, .. },
                Node::Decision { var: v2, lo: l2, hi: h2, .. },
            ) => v1 == v2 && {
                let (l1, h1, l2, h2) = (*l1, *h1, *l2, *h2);
                self.matches(l1, l2) && self.matches(h1, h2)
            },
            (Node::KernelAnd { core: c1, equivs: e1 }, Node::KernelAnd { core: c2, equivs: e2 }) => {
                e1 == e2 && {
                    let (c1, c2) = (*c1, *c2);
                    self.matches(c1, c2)
                }
            }
            (Node::DecompAnd { children: a }, Node::DecompAnd { children: b }) => {
                a.len() == b.len() && {
                    let (a, b) = (a.clone(), b.clone());
                    self.bijection(&a, &b)
                }
            }
            _ => false,
        };
        self.memo.insert((p, f), r);
        r
    }

    /// Perfect matching between partial and full children (augmenting
    /// paths; child lists are short).
    fn bijection(&mut self, a: &[NodeId], b: &[NodeId]) -> bool {
        let n = a.len();
        let mut ok = vec![vec![false; n]; n];
        for i in 0..n {
            for j in 0..n {
                ok[i][j] = self.matches(a[i], b[j]);
            }
        }
        let mut owner: Vec<Option<usize>> = vec![None; n];
        fn augment(i: usize, ok: &[Vec<bool>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
            for j in 0..ok.len() {
                if ok[i][j] && !seen[j] {
                    seen[j] = true;
                    if owner[j].is_none_or(|k| augment(k, ok, owner, seen)) {
                        owner[j] = Some(i);
                        return true;
                    }
                }
            }
            false
        }
        (0..n).all(|i| augment(i, &ok, &mut owner, &mut vec![false; n]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::Lit;
    use crate::kernel::prime_closure;

    fn c(n: u64) -> Count {
        Count::from_u64(n)
    }

    /// First-call diagram: root decision on x1 sampled high, kernel
    /// x2↔x5 over a decision on x2 sampled low into a count of 96.
    fn two_level(s: &mut PccddStore) -> (NodeId, NodeId, NodeId) {
        let k96 = s.mk_known(c(96), vec![4, 6]);
        let v = s
            .mk_decision(2, k96, NodeId::UNKNOWN, Count::ratio(2, 5), [1, 0])
            .unwrap();
        let eq = prime_closure(&[(Lit::pos(2), Lit::pos(5))]).unwrap();
        let kern = s.mk_kernel(v, eq).unwrap();
        let root = s
            .mk_decision(1, NodeId::UNKNOWN, kern, Count::ratio(1, 2), [0, 1])
            .unwrap();
        (root, kern, v)
    }

    #[test]
    fn test_constants() {
        let s = PccddStore::new(3);
        assert_eq!(s.count_full(NodeId::TRUE).unwrap(), c(8));
        assert_eq!(s.count_full(NodeId::FALSE).unwrap(), c(0));
        assert_eq!(s.bound(NodeId::UNKNOWN, BoundMode::Lower, None), c(0));
        assert_eq!(s.bound(NodeId::UNKNOWN, BoundMode::Upper, None), c(8));
        assert!(s.has_unknown(NodeId::UNKNOWN));
        assert!(s.count_full(NodeId::UNKNOWN).is_err());
    }

    #[test]
    fn test_single_decision_full_count() {
        let mut s = PccddStore::new(1);
        let d = s
            .mk_decision(1, NodeId::FALSE, NodeId::TRUE, Count::ratio(1, 2), [1, 1])
            .unwrap();
        assert_eq!(s.count_full(d).unwrap(), c(1));
    }

    #[test]
    fn test_two_level_values() {
        let mut s = PccddStore::new(7);
        let (root, kern, v) = two_level(&mut s);
        assert_eq!(s.estimate(v).unwrap(), c(80));
        assert_eq!(s.estimate(kern).unwrap(), c(40));
        assert_eq!(s.estimate(root).unwrap(), c(40));
        assert_eq!(s.bound(root, BoundMode::Lower, None), c(12));
        // upper: v = (96 + 128)/2 = 112, kernel 56, root (128 + 56)/2 = 92
        assert_eq!(s.bound(root, BoundMode::Upper, None), c(92));
        assert!(s.has_unknown(root));
    }

    #[test]
    fn test_decision_invariants() {
        let mut s = PccddStore::new(2);
        assert!(s
            .mk_decision(1, NodeId::FALSE, NodeId::TRUE, Count::zero(), [1, 0])
            .is_err());
        let ok = s.mk_decision(1, NodeId::TRUE, NodeId::FALSE, Count::zero(), [1, 0]);
        assert!(ok.is_ok());
        assert_eq!(
            s.mk_decision(1, NodeId::TRUE, NodeId::TRUE, Count::ratio(1, 2), [0, 0]),
            Err(PccddError::NoSamples)
        );
        assert!(matches!(
            s.mk_decision(1, NodeId::UNKNOWN, NodeId::TRUE, Count::ratio(1, 2), [1, 1]),
            Err(PccddError::Frequency { branch: 0, .. })
        ));
        assert!(matches!(
            s.mk_decision(1, NodeId::TRUE, NodeId::TRUE, Count::ratio(3, 2), [1, 1]),
            Err(PccddError::Probability(_))
        ));
    }

    #[test]
    fn test_decomp_invariants() {
        let mut s = PccddStore::new(6).with_verification(true);
        let a = s.mk_known(c(48), vec![4, 6]);
        let b = s.mk_known(c(56), vec![3, 5]);
        let d = s.mk_decomp(vec![a, b]).unwrap();
        assert_eq!(s.count_full(d).unwrap(), Count::ratio(48 * 56, 64));
        let overlap = s.mk_known(c(48), vec![4, 1]);
        assert_eq!(s.mk_decomp(vec![a, overlap]), Err(PccddError::DecompOverlap(4)));
        assert_eq!(s.mk_decomp(vec![a]), Err(PccddError::DecompArity(1)));
        assert_eq!(
            s.mk_decomp(vec![a, NodeId::UNKNOWN]),
            Err(PccddError::DecompChild("unknown"))
        );
    }

    #[test]
    fn test_kernel_invariants() {
        let mut s = PccddStore::new(7).with_verification(true);
        let eq = prime_closure(&[(Lit::pos(2), Lit::pos(5))]).unwrap();
        let bad = s.mk_known(c(16), vec![4, 5]);
        assert_eq!(s.mk_kernel(bad, eq.clone()), Err(PccddError::KernelVarInCore(5)));
        assert_eq!(s.mk_kernel(NodeId::UNKNOWN, eq), Err(PccddError::KernelUnknownCore));
        assert_eq!(s.mk_kernel(NodeId::TRUE, LitEquivSet::new()), Err(PccddError::KernelEmpty));
    }

    #[test]
    fn test_read_once_violation() {
        let mut s = PccddStore::new(2).with_verification(true);
        let inner = s
            .mk_decision(1, NodeId::TRUE, NodeId::TRUE, Count::ratio(1, 2), [1, 1])
            .unwrap();
        assert_eq!(
            s.mk_decision(1, inner, NodeId::TRUE, Count::ratio(1, 2), [1, 1]),
            Err(PccddError::ReadOnce(1))
        );
    }

    #[test]
    fn test_refinement_and_collapse() {
        let mut s = PccddStore::new(7);
        let (root, kern, v) = two_level(&mut s);
        let k32 = s.mk_known(c(32), vec![4, 6]);
        s.bump_frequency(v, 1);
        s.set_decision_child(v, 1, k32).unwrap();
        s.refresh(kern);
        assert!(!s.has_unknown(kern));
        assert!(s.has_unknown(root));
        let lower = s.bound(kern, BoundMode::Lower, None);
        assert_eq!(lower, c(32));
        let k = s.collapse_known(kern).unwrap();
        assert_eq!(*s.node(k), Node::Known { count: c(32), scope: vec![2, 4, 5, 6] });
        assert_eq!(s.collapse_known(k).unwrap(), k);
        assert!(s.collapse_known(root).is_err());
    }

    #[test]
    fn test_collapse_rebinds_cache() {
        let mut s = PccddStore::new(1);
        let cnf = Arc::new(Cnf::from_dimacs_clauses(1, &[&[1]]));
        let d = s
            .mk_decision(1, NodeId::FALSE, NodeId::TRUE, Count::one(), [0, 1])
            .unwrap();
        s.insert_cache(cnf.clone(), d);
        let k = s.collapse_known(d).unwrap();
        assert_eq!(s.lookup(&cnf), Some(k));
        assert_eq!(s.formula_of(k), Some(&cnf));
        assert_eq!(s.formula_of(d), None);
    }

    #[test]
    fn test_no_unknown_agreement() {
        let mut s = PccddStore::new(3);
        let d = s
            .mk_decision(2, NodeId::TRUE, NodeId::FALSE, Count::ratio(1, 3), [2, 1])
            .unwrap();
        let e = s.estimate(d).unwrap();
        assert_eq!(e, c(4));
        assert_eq!(s.bound(d, BoundMode::Lower, None), e);
        assert_eq!(s.bound(d, BoundMode::Upper, None), e);
        assert_eq!(s.count_full(d).unwrap(), e);
    }

    #[test]
    fn test_is_part_of() {
        let mut full = PccddStore::new(2);
        let inner = full
            .mk_decision(2, NodeId::FALSE, NodeId::TRUE, Count::ratio(1, 2), [1, 1])
            .unwrap();
        let froot = full
            .mk_decision(1, inner, NodeId::TRUE, Count::ratio(1, 2), [1, 1])
            .unwrap();
        let mut part = PccddStore::new(2);
        assert!(is_part_of(&part, NodeId::UNKNOWN, &full, froot));
        let p = part
            .mk_decision(1, NodeId::UNKNOWN, NodeId::TRUE, Count::ratio(1, 2), [0, 1])
            .unwrap();
        assert!(is_part_of(&part, p, &full, froot));
        let k = part.mk_known(c(2), vec![2]);
        let p2 = part
            .mk_decision(1, k, NodeId::TRUE, Count::ratio(1, 2), [1, 1])
            .unwrap();
        assert!(is_part_of(&part, p2, &full, froot));
        let wrong = part
            .mk_decision(2, NodeId::UNKNOWN, NodeId::TRUE, Count::ratio(1, 2), [0, 1])
            .unwrap();
        assert!(!is_part_of(&part, wrong, &full, froot));
    }

    #[test]
    fn test_dot_export() {
        let mut s = PccddStore::new(7);
        let (root, _, _) = two_level(&mut s);
        let dot = s.to_dot(root);
        assert!(dot.starts_with("digraph"));
        assert!(dot.contains("x2↔x5"));
        assert!(dot.contains("label=\"96\""));
    }
}
