//! Brute-force repair enumeration, used as ground truth against the dynamic
//! program. Deliberately independent of the hypergraph machinery: it tests
//! consistency directly on fact subsets.

use num_bigint::BigUint;
use num_traits::Zero;

use crate::hypergraphs::{build_solution_conflict, maximal_independent_sets};
use crate::relational::{
    evaluate_query_on, subset_satisfies, Constraint, Database, FactSet, Query,
};
use crate::{Error, Result};

/// Default ceiling on database size for exhaustive enumeration.
pub const MAX_ORACLE_DB: usize = 20;

/// All repairs (subset-maximal consistent subsets), in canonical order.
/// Refuses databases larger than `limit` facts.
pub fn enumerate_repairs(
    db: &Database,
    sigma: &[Constraint],
    limit: usize,
) -> Result<Vec<FactSet>> {
    let n = db.len();
    if n > limit || n >= 64 {
        return Err(Error::SizeGuard {
            what: "repair enumeration",
            size: n,
            limit: limit.min(63),
        });
    }
    let to_set = |mask: u64| -> FactSet { (0..n).filter(|&i| mask & (1 << i) != 0).collect() };
    // scan subsets largest-first: a consistent set not inside an already-found
    // repair is itself maximal
    let mut by_size: Vec<u64> = (0..(1u64 << n)).collect();
    by_size.sort_by_key(|m| std::cmp::Reverse(m.count_ones()));
    let mut repairs_masks: Vec<u64> = Vec::new();
    let mut repairs = Vec::new();
    for mask in by_size {
        if repairs_masks.iter().any(|&r| mask & !r == 0) {
            continue;
        }
        let set = to_set(mask);
        if subset_satisfies(db, &set, sigma) {
            repairs_masks.push(mask);
            repairs.push(set);
        }
    }
    repairs.sort();
    Ok(repairs)
}

/// `(total, falsifying, satisfying)` repair counts by exhaustive enumeration.
pub fn oracle_counts(
    db: &Database,
    sigma: &[Constraint],
    q: &Query,
    limit: usize,
) -> Result<(BigUint, BigUint, BigUint)> {
    let repairs = enumerate_repairs(db, sigma, limit)?;
    let total = BigUint::from(repairs.len());
    let mut satisfying = BigUint::zero();
    for r in &repairs {
        if evaluate_query_on(db, r, q)? {
            satisfying += 1u32;
        }
    }
    let falsifying = &total - &satisfying;
    Ok((total, falsifying, satisfying))
}

/// Checks that the repairs are exactly the maximal independent sets of the
/// conflict hypergraph, returning both sides' cardinality.
pub fn check_mis_correspondence(
    db: &Database,
    sigma: &[Constraint],
    limit: usize,
) -> Result<usize> {
    let repairs = enumerate_repairs(db, sigma, limit)?;
    let h = build_solution_conflict(db, sigma, &Query::False);
    let mut mis = maximal_independent_sets(&h, limit)?;
    mis.sort();
    if repairs != mis {
        return Err(Error::Precondition(format!(
            "repairs and maximal independent sets disagree: {repairs:?} vs {mis:?}"
        )));
    }
    Ok(repairs.len())
}
