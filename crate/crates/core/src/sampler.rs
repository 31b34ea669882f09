//! One stochastic top-down compilation pass over a shared partial CCDD, and
//! marginal estimation by projected compilation.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cnf::{detect_lit_equ, sat, Cnf, Lit};
use crate::count::Count;
use crate::exact::{easy_instance, exact_count, EasyConfig};
use crate::kernel::{construct_core, prime_closure, should_kernelize, KernelConfig};
use crate::pccdd::{Node, NodeId, PccddError, PccddStore};
use crate::structure::{decompose, pick_good_var, Decomposition, VarHeuristic};

/// Variables kept when estimating a marginal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    /// The branching variable and its `k` most frequent primal-graph
    /// neighbors.
    Neighbors(usize),
    /// Every variable, giving exact marginals.
    All,
}

impl Default for Projection {
    fn default() -> Self {
        Projection::Neighbors(8)
    }
}

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub kernel: KernelConfig,
    pub heuristic: VarHeuristic,
    pub projection: Projection,
    /// `None` disables exact counting of easy sub-formulas.
    pub easy: Option<EasyConfig>,
    /// Limit on nodes plus cache entries before a restart is requested.
    pub node_budget: usize,
    /// Run the walking structural checks on every construction.
    pub verify: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            kernel: KernelConfig::default(),
            heuristic: VarHeuristic::Score,
            projection: Projection::default(),
            easy: None,
            node_budget: 1 << 22,
            verify: false,
        }
    }
}

impl SamplerConfig {
    /// Defaults with the easy gate derived from `cnf`.
    pub fn for_formula(cnf: &Cnf) -> Self {
        SamplerConfig {
            easy: Some(EasyConfig::from_cnf(cnf)),
            ..SamplerConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SamplerError {
    #[error("diagram construction failed: {0}")]
    Construction(#[from] PccddError),
}

/// Replacement marginal estimator; `None` means both branches are
/// unsatisfiable.
pub type MargProbHook = Box<dyn FnMut(&Cnf, u32) -> Option<Count> + Send>;

pub struct Sampler {
    store: PccddStore,
    cfg: SamplerConfig,
    rng: ChaCha8Rng,
    forced: VecDeque<bool>,
    marg_hook: Option<MargProbHook>,
    /// Build complete diagrams instead of sampling one branch.
    expand_all: bool,
}

impl fmt::Debug for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Sampler")
            .field("nodes", &self.store.len())
            .field("cfg", &self.cfg)
            .field("forced", &self.forced)
            .finish_non_exhaustive()
    }
}

impl Sampler {
    pub fn new(num_vars: u32, cfg: SamplerConfig, seed: u64) -> Self {
        Sampler::with_rng(num_vars, cfg, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn with_rng(num_vars: u32, cfg: SamplerConfig, rng: ChaCha8Rng) -> Self {
        Sampler {
            store: PccddStore::new(num_vars).with_verification(cfg.verify),
            cfg,
            rng,
            forced: VecDeque::new(),
            marg_hook: None,
            expand_all: false,
        }
    }

    pub fn store(&self) -> &PccddStore {
        &self.store
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.cfg
    }

    /// Queues branch choices that override the next random draws
    /// (`true` = high branch).
    pub fn force_samples<I: IntoIterator<Item = bool>>(&mut self, samples: I) {
        self.forced.extend(samples);
    }

    pub fn pending_forced(&self) -> usize {
        self.forced.len()
    }

    pub fn set_marg_prob(&mut self, hook: MargProbHook) {
        self.marg_hook = Some(hook);
    }

    pub fn over_budget(&self) -> bool {
        self.store.footprint() > self.cfg.node_budget
    }

    /// Drops the diagram and caches; the random stream continues.
    pub fn clear(&mut self) {
        self.store.clear();
    }

    /// One pass from the root formula; returns the root's current id.
    pub fn micro_kc(&mut self, cnf: &Arc<Cnf>) -> Result<NodeId, SamplerError> {
        self.visit(cnf, 0)
    }

    fn sample(&mut self, p1: &Count) -> usize {
        if let Some(b) = self.forced.pop_front() {
            return usize::from(b);
        }
        let draw: u64 = self.rng.random();
        usize::from(Count::from_u64(draw) < p1.mul_pow2(64))
    }

    fn visit(&mut self, cnf: &Arc<Cnf>, depth: u32) -> Result<NodeId, SamplerError> {
        if cnf.is_false() {
            return Ok(NodeId::FALSE);
        }
        if cnf.is_true() {
            return Ok(NodeId::TRUE);
        }
        if let Some(id) = self.store.lookup(cnf) {
            if self.expand_all {
                return Ok(id);
            }
            return self.revisit(id, cnf, depth);
        }
        if let Some(easy) = &self.cfg.easy {
            if easy_instance(cnf, easy) {
                let count = exact_count(cnf);
                if count.is_zero() {
                    return Ok(NodeId::FALSE);
                }
                let id = self.store.mk_known(count, cnf.vars().to_vec());
                self.store.insert_cache(cnf.clone(), id);
                return Ok(id);
            }
        }
        self.first_visit(cnf, depth)
    }

    fn revisit(&mut self, id: NodeId, cnf: &Arc<Cnf>, depth: u32) -> Result<NodeId, SamplerError> {
        if !self.store.has_unknown(id) {
            return Ok(self.store.collapse_known(id)?);
        }
        match self.store.node(id).clone() {
            Node::Decision { var, p1, .. } => {
                let b = self.sample(&p1);
                self.store.bump_frequency(id, b);
                let child_cnf = Arc::new(cnf.condition(&[Lit::new(var, b == 1)]));
                let child = self.visit(&child_cnf, depth + 1)?;
                self.store.set_decision_child(id, b, child)?;
            }
            Node::DecompAnd { children } => {
                for (i, c) in children.into_iter().enumerate() {
                    if !self.store.has_unknown(c) {
                        continue;
                    }
                    let comp = self.store.formula_of(c).expect("inner nodes are cached").clone();
                    let fresh = self.visit(&comp, depth)?;
                    self.store.set_decomp_child(id, i, fresh)?;
                }
            }
            Node::KernelAnd { core, .. } => {
                if self.store.has_unknown(core) {
                    let core_cnf = self.store.formula_of(core).expect("inner nodes are cached").clone();
                    let fresh = self.visit(&core_cnf, depth)?;
                    self.store.set_kernel_core(id, fresh)?;
                }
            }
            _ => {}
        }
        self.store.refresh(id);
        Ok(id)
    }

    fn first_visit(&mut self, cnf: &Arc<Cnf>, depth: u32) -> Result<NodeId, SamplerError> {
        if should_kernelize(cnf, depth, &self.cfg.kernel) {
            match prime_closure(&detect_lit_equ(cnf)) {
                Err(_) => return Ok(NodeId::FALSE),
                Ok(eq) if !eq.is_empty() => {
                    let core = Arc::new(construct_core(cnf, &eq));
                    let c = self.visit(&core, depth)?;
                    if c == NodeId::FALSE {
                        return Ok(NodeId::FALSE);
                    }
                    let id = self.store.mk_kernel(c, eq)?;
                    self.store.insert_cache(cnf.clone(), id);
                    return Ok(id);
                }
                Ok(_) => {}
            }
        }

        let (implied, components) = match decompose(cnf) {
            Decomposition::Unsat => return Ok(NodeId::FALSE),
            Decomposition::Split { implied, components } => (implied, components),
        };
        if !implied.is_empty() || components.len() > 1 {
            let mut children = Vec::with_capacity(components.len() + 1);
            if !implied.is_empty() {
                let x = u64::from(cnf.num_vars());
                let cube = Count::pow2(x - implied.len() as u64);
                let scope = implied.iter().map(|l| l.var()).collect();
                children.push(self.store.mk_known(cube, scope));
            }
            for comp in components {
                let c = self.visit(&Arc::new(comp), depth)?;
                if c == NodeId::FALSE {
                    return Ok(NodeId::FALSE);
                }
                children.push(c);
            }
            let id = if children.len() == 1 {
                children[0]
            } else {
                self.store.mk_decomp(children)?
            };
            self.store.insert_cache(cnf.clone(), id);
            return Ok(id);
        }

        let x = pick_good_var(cnf, None, self.cfg.heuristic).expect("formula has variables");
        let lo_cnf = Arc::new(cnf.condition(&[Lit::neg(x)]));
        let hi_cnf = Arc::new(cnf.condition(&[Lit::pos(x)]));
        let id = if self.expand_all {
            let lo = self.visit(&lo_cnf, depth + 1)?;
            let hi = self.visit(&hi_cnf, depth + 1)?;
            if lo == NodeId::FALSE && hi == NodeId::FALSE {
                return Ok(NodeId::FALSE);
            }
            self.store.mk_decision(x, lo, hi, Count::ratio(1, 2), [1, 1])?
        } else {
            let Some(p1) = self.marginal(cnf, x) else {
                return Ok(NodeId::FALSE);
            };
            let p = [p1.complement(), p1.clone()];
            let b = self.sample(&p1);
            let child = self.visit(if b == 1 { &hi_cnf } else { &lo_cnf }, depth + 1)?;
            let other = if p[1 - b].is_zero() { NodeId::FALSE } else { NodeId::UNKNOWN };
            let mut ch = [other, other];
            let mut f = [0, 0];
            ch[b] = child;
            f[b] = 1;
            self.store.mk_decision(x, ch[0], ch[1], p1, f)?
        };
        self.store.insert_cache(cnf.clone(), id);
        Ok(id)
    }

    fn marginal(&mut self, cnf: &Cnf, x: u32) -> Option<Count> {
        if let Some(hook) = &mut self.marg_hook {
            return hook(cnf, x);
        }
        marg_prob(cnf, x, self.cfg.projection, self.cfg.heuristic).ok()
    }
}

/// Complete diagram of `cnf` built by the sampler's own recursion with every
/// decision expanded on both branches. Marginals are not computed; decisions
/// carry probability ½ and one visit per branch.
pub fn compile_full(cnf: &Arc<Cnf>, cfg: &SamplerConfig) -> Result<(PccddStore, NodeId), SamplerError> {
    let mut s = Sampler::new(cnf.num_vars(), cfg.clone(), 0);
    s.expand_all = true;
    let root = s.visit(cnf, 0)?;
    Ok((s.store, root))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MargProbError {
    #[error("both branches of x{0} are unsatisfiable")]
    Unsat(u32),
}

/// Estimated probability that `x` is true in a random model of `cnf`: the
/// ratio of projected counts of the two branches.
pub fn marg_prob(
    cnf: &Cnf,
    x: u32,
    projection: Projection,
    heuristic: VarHeuristic,
) -> Result<Count, MargProbError> {
    let proj = choose_projection(cnf, x, projection);
    let mut store = PccddStore::new(cnf.num_vars());
    let mut cache = HashMap::new();
    let lo = projected_kc(&mut store, &mut cache, &cnf.condition(&[Lit::neg(x)]), &proj, heuristic);
    let hi = projected_kc(&mut store, &mut cache, &cnf.condition(&[Lit::pos(x)]), &proj, heuristic);
    let zl = store.count_full(lo).expect("projected diagrams are complete");
    let zh = store.count_full(hi).expect("projected diagrams are complete");
    let total = &zl + &zh;
    if total.is_zero() {
        return Err(MargProbError::Unsat(x));
    }
    Ok(zh / total)
}

/// Projection set for the marginal of `x`, sorted.
pub fn choose_projection(cnf: &Cnf, x: u32, projection: Projection) -> Vec<u32> {
    let k = match projection {
        Projection::All => return cnf.vars().to_vec(),
        Projection::Neighbors(k) => k,
    };
    let mut occurrences: HashMap<u32, usize> = HashMap::new();
    for c in cnf.clauses() {
        for l in c {
            *occurrences.entry(l.var()).or_default() += 1;
        }
    }
    let mut neighbors: Vec<u32> = cnf
        .clauses()
        .filter(|c| c.iter().any(|l| l.var() == x))
        .flat_map(|c| c.iter().map(|l| l.var()))
        .filter(|&v| v != x)
        .collect();
    neighbors.sort_unstable();
    neighbors.dedup();
    neighbors.sort_by_key(|v| std::cmp::Reverse(occurrences[v]));
    neighbors.truncate(k);
    neighbors.push(x);
    neighbors.sort_unstable();
    neighbors
}

/// Complete diagram whose count weighs each assignment of `proj` (sorted)
/// that extends to a model; variables outside `proj` are only checked for
/// satisfiability. Built in `store` with `cache` keyed by formula.
pub fn projected_kc(
    store: &mut PccddStore,
    cache: &mut HashMap<Cnf, NodeId>,
    cnf: &Cnf,
    proj: &[u32],
    heuristic: VarHeuristic,
) -> NodeId {
    if cnf.is_false() {
        return NodeId::FALSE;
    }
    if cnf.is_true() {
        return NodeId::TRUE;
    }
    if let Some(&id) = cache.get(cnf) {
        return id;
    }
    let in_proj = |v: u32| proj.binary_search(&v).is_ok();
    let id = if !cnf.vars().iter().any(|&v| in_proj(v)) {
        if sat(cnf) {
            NodeId::TRUE
        } else {
            NodeId::FALSE
        }
    } else {
        match decompose(cnf) {
            Decomposition::Unsat => NodeId::FALSE,
            Decomposition::Split { implied, components }
                if !implied.is_empty() || components.len() > 1 =>
            {
                let fixed: Vec<u32> = implied.iter().map(|l| l.var()).filter(|&v| in_proj(v)).collect();
                let mut children = Vec::new();
                if !fixed.is_empty() {
                    let cube = Count::pow2(u64::from(cnf.num_vars()) - fixed.len() as u64);
                    children.push(store.mk_known(cube, fixed));
                }
                let mut unsat = false;
                for comp in &components {
                    match projected_kc(store, cache, comp, proj, heuristic) {
                        NodeId::FALSE => {
                            unsat = true;
                            break;
                        }
                        NodeId::TRUE => {}
                        c => children.push(c),
                    }
                }
                match children.len() {
                    _ if unsat => NodeId::FALSE,
                    0 => NodeId::TRUE,
                    1 => children[0],
                    _ => store.mk_decomp(children).expect("components are disjoint"),
                }
            }
            Decomposition::Split { .. } => {
                let y = pick_good_var(cnf, Some(proj), heuristic).expect("a projected variable remains");
                let lo = projected_kc(store, cache, &cnf.condition(&[Lit::neg(y)]), proj, heuristic);
                let hi = projected_kc(store, cache, &cnf.condition(&[Lit::pos(y)]), proj, heuristic);
                if lo == NodeId::FALSE && hi == NodeId::FALSE {
                    NodeId::FALSE
                } else {
                    store
                        .mk_decision(y, lo, hi, Count::ratio(1, 2), [1, 1])
                        .expect("complete decision")
                }
            }
        }
    };
    cache.insert(cnf.clone(), id);
    id
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::tests::example_formula;
    use crate::oracle::brute_marginal;

    fn cnf(nv: u32, clauses: &[&[i32]]) -> Cnf {
        Cnf::from_dimacs_clauses(nv, clauses)
    }

    #[test]
    fn test_projected_kc_leaf_rules() {
        let mut store = PccddStore::new(2);
        let mut cache = HashMap::new();
        let c = cnf(2, &[&[1, 2]]);
        assert_eq!(projected_kc(&mut store, &mut cache, &c, &[], VarHeuristic::Score), NodeId::TRUE);
        let c = cnf(2, &[&[1, 2], &[-1, 2], &[1, -2], &[-1, -2]]);
        assert_eq!(projected_kc(&mut store, &mut cache, &c, &[1], VarHeuristic::Score), NodeId::FALSE);
    }

    #[test]
    fn test_projected_kc_projection_of_clause() {
        let mut store = PccddStore::new(2);
        let mut cache = HashMap::new();
        let c = cnf(2, &[&[1, 2]]);
        let root = projected_kc(&mut store, &mut cache, &c, &[1], VarHeuristic::Score);
        assert_eq!(
            *store.node(root),
            Node::Decision { var: 1, lo: NodeId::TRUE, hi: NodeId::TRUE, p1: Count::ratio(1, 2), f: [1, 1] }
        );
        assert_eq!(store.count_full(root).unwrap(), Count::from_u64(4));
    }

    #[test]
    fn test_marg_prob_examples() {
        let unit = cnf(1, &[&[1]]);
        assert_eq!(marg_prob(&unit, 1, Projection::All, VarHeuristic::Score).unwrap(), Count::one());
        let xor = cnf(2, &[&[1, 2], &[-1, -2]]);
        assert_eq!(marg_prob(&xor, 1, Projection::All, VarHeuristic::Score).unwrap(), Count::ratio(1, 2));
        let unsat = cnf(1, &[&[1], &[-1]]);
        assert_eq!(marg_prob(&unsat, 1, Projection::All, VarHeuristic::Score), Err(MargProbError::Unsat(1)));
    }

    #[test]
    fn test_marg_prob_exact_with_full_projection() {
        let formula = example_formula();
        let p = marg_prob(&formula, 1, Projection::All, VarHeuristic::Score).unwrap();
        assert_eq!(p, brute_marginal(&formula, 1).unwrap());
        assert_eq!(p, Count::ratio(4, 11));
    }

    #[test]
    fn test_choose_projection() {
        let isolated = cnf(3, &[&[1], &[2, 3]]);
        assert_eq!(choose_projection(&isolated, 1, Projection::Neighbors(8)), vec![1]);
        let star = cnf(4, &[&[1, 2], &[1, 3], &[1, 4]]);
        assert_eq!(choose_projection(&star, 1, Projection::Neighbors(8)), vec![1, 2, 3, 4]);
        // 12 neighbors; 2..=5 occur in extra clauses, ties go to small indices
        let mut clauses: Vec<Vec<i32>> = (2..=13).map(|v| vec![1, v]).collect();
        clauses.extend([vec![5, 4], vec![4, 3], vec![3, 13]]);
        let refs: Vec<&[i32]> = clauses.iter().map(Vec::as_slice).collect();
        let wide = cnf(13, &refs);
        let p = choose_projection(&wide, 1, Projection::Neighbors(8));
        assert_eq!(p, vec![1, 2, 3, 4, 5, 6, 7, 8, 13]);
    }

    #[test]
    fn test_false_and_true_roots() {
        let mut s = Sampler::new(2, SamplerConfig::default(), 0);
        assert_eq!(s.micro_kc(&Arc::new(Cnf::false_formula(2))).unwrap(), NodeId::FALSE);
        assert_eq!(s.micro_kc(&Arc::new(Cnf::true_formula(2))).unwrap(), NodeId::TRUE);
        assert_eq!(s.micro_kc(&Arc::new(cnf(1, &[&[1], &[-1]]))).unwrap(), NodeId::FALSE);
    }

    #[test]
    fn test_cached_known_returned_without_recursion() {
        let formula = Arc::new(example_formula());
        let cfg = SamplerConfig { easy: Some(EasyConfig::with_bound(64)), ..SamplerConfig::default() };
        let mut s = Sampler::new(7, cfg, 3);
        let a = s.micro_kc(&formula).unwrap();
        let len = s.store().len();
        let b = s.micro_kc(&formula).unwrap();
        assert_eq!(a, b);
        assert_eq!(s.store().len(), len);
        assert_eq!(*s.store().node(a), Node::Known { count: Count::from_u64(55), scope: formula.vars().to_vec() });
    }

    #[test]
    fn test_determinism() {
        let formula = Arc::new(example_formula());
        let run = |seed| {
            let mut s = Sampler::new(7, SamplerConfig::default(), seed);
            let mut roots = Vec::new();
            for _ in 0..5 {
                roots.push(s.micro_kc(&formula).unwrap());
            }
            let nodes: Vec<Node> = s.store().nodes().map(|(_, n)| n.clone()).collect();
            (roots, nodes)
        };
        assert_eq!(run(11), run(11));
    }

    #[test]
    fn test_compile_full_counts() {
        let formula = Arc::new(example_formula());
        let (store, root) = compile_full(&formula, &SamplerConfig::default()).unwrap();
        assert!(!store.has_unknown_exact(root));
        assert_eq!(store.count_full(root).unwrap(), Count::from_u64(55));
        store.validate(root).unwrap();
    }
}
