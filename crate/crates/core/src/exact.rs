//! Easy-instance gate and an exact counter for small sub-formulas.

use std::collections::HashMap;

use crate::cnf::{propagate, Cnf, Lit, PropStatus};
use crate::count::Count;
use crate::structure::{connected_components, minfill_width, pick_good_var, VarHeuristic};

/// Size threshold below which a sub-formula is counted exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EasyConfig {
    pub cap: usize,
    /// Variables occurring in non-unit clauses of the input formula.
    pub nonunit_vars: usize,
    /// Min-fill width of the input formula.
    pub width: usize,
}

impl EasyConfig {
    pub fn new(nonunit_vars: usize, width: usize) -> Self {
        EasyConfig {
            cap: 512,
            nonunit_vars,
            width,
        }
    }

    pub fn from_cnf(cnf: &Cnf) -> Self {
        let mut vars: Vec<u32> = cnf
            .clauses()
            .filter(|c| c.len() >= 2)
            .flat_map(|c| c.iter().map(|l| l.var()))
            .collect();
        vars.sort_unstable();
        vars.dedup();
        EasyConfig::new(vars.len(), minfill_width(cnf))
    }

    /// A fixed bound, whatever the input looks like.
    pub fn with_bound(bound: usize) -> Self {
        EasyConfig {
            cap: bound,
            nonunit_vars: usize::MAX / 4,
            width: 0,
        }
    }

    pub fn bound(&self) -> usize {
        let n = self.nonunit_vars;
        let param = if self.width <= 32 {
            n / 4 * 3 + n % 4 * 3 / 4
        } else if self.width <= 64 {
            n / 3 * 2 + n % 3 * 2 / 3
        } else {
            n / 2
        };
        param.min(self.cap)
    }
}

pub fn easy_instance(cnf: &Cnf, cfg: &EasyConfig) -> bool {
    cnf.vars().len() <= cfg.bound()
}

/// Model count of `cnf` over its full universe `1..=num_vars`, by DPLL with
/// unit propagation, component decomposition and component caching.
pub fn exact_count(cnf: &Cnf) -> Count {
    let mut counter = ExactCounter::default();
    counter.fraction(cnf).mul_pow2(u64::from(cnf.num_vars()))
}

/// Counts as fractions of `2^|X|`, so components multiply directly.
#[derive(Default)]
struct ExactCounter {
    cache: HashMap<Cnf, Count>,
}

impl ExactCounter {
    fn fraction(&mut self, cnf: &Cnf) -> Count {
        if cnf.is_false() {
            return Count::zero();
        }
        if cnf.is_true() {
            return Count::one();
        }
        if let Some(c) = self.cache.get(cnf) {
            return c.clone();
        }
        let result = self.solve(cnf);
        self.cache.insert(cnf.clone(), result.clone());
        result
    }

    fn solve(&mut self, cnf: &Cnf) -> Count {
        let prop = propagate(cnf);
        if prop.status == PropStatus::Conflict {
            return Count::zero();
        }
        let residual = cnf.condition(&prop.implied);
        if residual.is_false() {
            return Count::zero();
        }
        let units = prop.implied.len() as u64;
        let components = connected_components(&residual);
        if units > 0 || components.len() > 1 {
            let mut frac = Count::inv_pow2(units);
            for comp in &components {
                let f = self.fraction(comp);
                if f.is_zero() {
                    return f;
                }
                frac = frac * f;
            }
            return frac;
        }
        let x = pick_good_var(&residual, None, VarHeuristic::Score).expect("nonempty residual");
        let lo = self.fraction(&residual.condition(&[Lit::neg(x)]));
        let hi = self.fraction(&residual.condition(&[Lit::pos(x)]));
        (lo + hi).div_pow2(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::tests::example_formula;

    #[test]
    fn test_easy_bound_branches() {
        assert_eq!(EasyConfig::new(100, 20).bound(), 75);
        assert_eq!(EasyConfig::new(100, 40).bound(), 66);
        assert_eq!(EasyConfig::new(100, 70).bound(), 50);
        assert_eq!(EasyConfig::new(2000, 20).bound(), 512);
        assert_eq!(EasyConfig::new(7, 3).bound(), 5);
    }

    #[test]
    fn test_easy_instance() {
        let seventy = Cnf::new(
            70,
            (1..70u32).map(|v| vec![Lit::pos(v), Lit::pos(v + 1)]),
        );
        assert!(easy_instance(&seventy, &EasyConfig::new(100, 20)));
        assert!(!easy_instance(&seventy, &EasyConfig::new(100, 70)));
    }

    #[test]
    fn test_exact_count_small() {
        assert_eq!(exact_count(&Cnf::from_dimacs_clauses(7, &[&[4, 6]])), Count::from_u64(96));
        assert_eq!(exact_count(&Cnf::true_formula(7)), Count::from_u64(128));
        assert_eq!(exact_count(&Cnf::false_formula(7)), Count::zero());
        assert_eq!(exact_count(&example_formula()), Count::from_u64(55));
    }

    #[test]
    fn test_normalization_consistency() {
        let small = Cnf::from_dimacs_clauses(3, &[&[1, -2], &[2, 3]]);
        let big = Cnf::from_dimacs_clauses(9, &[&[1, -2], &[2, 3]]);
        assert_eq!(exact_count(&big), exact_count(&small).mul_pow2(6));
    }
}
