//! Brute-force counting by enumeration, kept free of any propagation or
//! decomposition so it shares no logic with the counters it checks.

use rand::Rng;

use crate::cnf::{Cnf, Lit};
use crate::count::Count;

pub const DEFAULT_MAX_VARS: usize = 26;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("{vars} variables exceed the enumeration limit of {limit}")]
    TooLarge { vars: usize, limit: usize },
    #[error("formula is unsatisfiable")]
    Unsat,
}

/// Number of assignments to `1..=num_vars` satisfying `cnf`.
pub fn brute_count(cnf: &Cnf) -> Result<Count, OracleError> {
    brute_count_limited(cnf, DEFAULT_MAX_VARS)
}

pub fn brute_count_limited(cnf: &Cnf, limit: usize) -> Result<Count, OracleError> {
    let vars = cnf.vars();
    if vars.len() > limit {
        return Err(OracleError::TooLarge { vars: vars.len(), limit });
    }
    if cnf.is_false() {
        return Ok(Count::zero());
    }
    // Each clause is checked once its last variable (in enumeration order)
    // has been assigned.
    let pos = |v: u32| vars.binary_search(&v).expect("var of cnf");
    let mut due: Vec<Vec<&[Lit]>> = vec![Vec::new(); vars.len()];
    for c in cnf.clauses() {
        let last = c.iter().map(|l| pos(l.var())).max().expect("nonempty clause");
        due[last].push(c);
    }
    let mut value = vec![false; cnf.num_vars() as usize + 1];
    let models = enumerate(0, vars, &due, &mut value);
    let free = u64::from(cnf.num_vars()) - vars.len() as u64;
    Ok(Count::from_u64(models).mul_pow2(free))
}

fn enumerate(i: usize, vars: &[u32], due: &[Vec<&[Lit]>], value: &mut [bool]) -> u64 {
    if i == vars.len() {
        return 1;
    }
    let mut total = 0;
    for b in [false, true] {
        value[vars[i] as usize] = b;
        let ok = due[i]
            .iter()
            .all(|c| c.iter().any(|l| value[l.var() as usize] == l.is_positive()));
        if ok {
            total += enumerate(i + 1, vars, due, value);
        }
    }
    total
}

/// Probability that `x` is true in a uniformly random model.
pub fn brute_marginal(cnf: &Cnf, x: u32) -> Result<Count, OracleError> {
    let all = brute_count(cnf)?;
    if all.is_zero() {
        return Err(OracleError::Unsat);
    }
    let with_x = brute_count(&cnf.condition(&[Lit::pos(x)]))?;
    // Conditioning frees x, doubling its count relative to models with x set.
    Ok(with_x.div_pow2(1) / all)
}

/// Uniform random CNF: each clause picks a width in `widths`, that many
/// distinct variables, and random signs.
pub fn random_cnf<R: Rng + ?Sized>(
    rng: &mut R,
    num_vars: u32,
    num_clauses: usize,
    widths: std::ops::RangeInclusive<usize>,
) -> Cnf {
    let mut clauses = Vec::with_capacity(num_clauses);
    for _ in 0..num_clauses {
        let w = rng.random_range(widths.clone()).min(num_vars as usize);
        let mut vars: Vec<u32> = Vec::with_capacity(w);
        while vars.len() < w {
            let v = rng.random_range(1..=num_vars);
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
        clauses.push(
            vars.into_iter()
                .map(|v| Lit::new(v, rng.random_bool(0.5)))
                .collect::<Vec<_>>(),
        );
    }
    Cnf::new(num_vars, clauses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::tests::example_formula;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn test_known_counts() {
        let c = Cnf::from_dimacs_clauses(7, &[&[4, 6]]);
        assert_eq!(brute_count(&c).unwrap(), Count::from_u64(96));
        assert_eq!(brute_count(&Cnf::true_formula(5)).unwrap(), Count::from_u64(32));
        assert_eq!(brute_count(&Cnf::false_formula(5)).unwrap(), Count::zero());
    }

    #[test]
    fn test_example_formula_pinned() {
        assert_eq!(brute_count(&example_formula()).unwrap(), Count::from_u64(55));
    }

    #[test]
    fn test_marginals() {
        let unit = Cnf::from_dimacs_clauses(1, &[&[1]]);
        assert_eq!(brute_marginal(&unit, 1).unwrap(), Count::one());
        let xor = Cnf::from_dimacs_clauses(2, &[&[1, 2], &[-1, -2]]);
        assert_eq!(brute_marginal(&xor, 1).unwrap(), Count::ratio(1, 2));
        let unsat = Cnf::from_dimacs_clauses(1, &[&[1], &[-1]]);
        assert_eq!(brute_marginal(&unsat, 1), Err(OracleError::Unsat));
    }

    #[test]
    fn test_limit() {
        let c = Cnf::from_dimacs_clauses(3, &[&[1, 2, 3]]);
        assert_eq!(
            brute_count_limited(&c, 2),
            Err(OracleError::TooLarge { vars: 3, limit: 2 })
        );
    }

    #[test]
    fn test_renaming_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let c = random_cnf(&mut rng, 8, 20, 2..=3);
            let renamed = Cnf::new(
                8,
                c.clauses()
                    .map(|cl| cl.iter().map(|l| Lit::new(9 - l.var(), l.is_positive())).collect::<Vec<_>>()),
            );
            assert_eq!(brute_count(&c).unwrap(), brute_count(&renamed).unwrap());
        }
    }
}
