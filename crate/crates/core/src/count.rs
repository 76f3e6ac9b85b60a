//! Repair counting over a rooted tree decomposition of the solution-conflict
//! hypergraph, and the consistent-query-answering decision derived from it.
//!
//! The dynamic program computes the number of repairs falsifying a monotonic
//! query. Each bag keeps a sparse table over pairs `(r, s)` with
//! `r ⊆ s ⊆ bag`: `r` is the repair's trace in the bag and `s` the part of
//! the bag already accounted for as "maximally covered". Child tables fold
//! into the parent by summing over covers of the shared interface.

use std::collections::HashMap;
use std::time::Instant;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::hypergraphs::{build_solution_conflict, EdgeLabel, Hyperedge, LabeledHypergraph};
use crate::relational::{
    satisfies_constraints, subset_satisfies, validate_constraints, Constraint, Database, FactId,
    FactSet, Query,
};
use crate::treedec::{decompose, validate_detailed, Heuristic, RootedDecomposition};
use crate::{Error, Result};

/// Default ceiling on bag size; the tables can hold up to `3^bag` entries.
pub const MAX_BAG: usize = 25;

#[derive(Clone, Copy, Debug)]
pub struct CountOptions {
    /// Run even when a bag exceeds [`MAX_BAG`] (still capped at 32).
    pub force: bool,
    pub max_bag: usize,
}

impl Default for CountOptions {
    fn default() -> CountOptions {
        CountOptions {
            force: false,
            max_bag: MAX_BAG,
        }
    }
}

/// The largest set `s` such that `r` is a max-repair of `s`: `r` together
/// with every fact whose addition breaks consistency. Errors if `r` itself is
/// inconsistent.
pub fn max_rep(db: &Database, sigma: &[Constraint], r: &FactSet) -> Result<FactSet> {
    if !subset_satisfies(db, r, sigma) {
        return Err(Error::Precondition(
            "max_rep requires a consistent fact set".into(),
        ));
    }
    let mut out = r.clone();
    for id in db.all_ids() {
        if r.contains(&id) {
            continue;
        }
        let extended = r.iter().chain(std::iter::once(&id)).map(|&i| db.fact(i));
        if !satisfies_constraints(extended, sigma) {
            out.insert(id);
        }
    }
    Ok(out)
}

/// True iff `r` is a repair of `s` and of no strictly larger subset: `r` is
/// consistent, `r ⊆ s`, and `s` is exactly `r` plus the facts conflicting
/// with `r`.
pub fn is_max_repair(db: &Database, sigma: &[Constraint], r: &FactSet, s: &FactSet) -> bool {
    r.is_subset(s)
        && subset_satisfies(db, r, sigma)
        && max_rep(db, sigma, r).map(|m| m == *s).unwrap_or(false)
}

/// The finished dynamic program: one table per bag, one table per tree edge,
/// and the root sum.
pub struct DpRun {
    bags: Vec<Vec<FactId>>,
    f_tables: Vec<HashMap<(u32, u32), BigUint>>,
    g_tables: HashMap<(usize, usize), HashMap<(u32, u32), BigUint>>,
    answer: BigUint,
}

impl DpRun {
    /// Number of repairs of the database falsifying the query.
    pub fn answer(&self) -> &BigUint {
        &self.answer
    }

    fn mask_in_bag(&self, bag: usize, set: &FactSet) -> Result<u32> {
        let facts = &self.bags[bag];
        let mut mask = 0u32;
        for id in set {
            match facts.binary_search(id) {
                Ok(i) => mask |= 1 << i,
                Err(_) => {
                    return Err(Error::Precondition(format!(
                        "fact {id} is not in bag {bag}"
                    )))
                }
            }
        }
        Ok(mask)
    }

    fn set_of_mask(&self, bag: usize, mask: u32) -> FactSet {
        self.bags[bag]
            .iter()
            .enumerate()
            .filter(|&(i, _)| mask & (1 << i) != 0)
            .map(|(_, &id)| id)
            .collect()
    }

    /// Stored table value for the bag after all its children were folded in;
    /// absent entries are zero.
    pub fn f_value(&self, bag: usize, r: &FactSet, s: &FactSet) -> Result<BigUint> {
        let key = (self.mask_in_bag(bag, r)?, self.mask_in_bag(bag, s)?);
        Ok(self.f_tables[bag].get(&key).cloned().unwrap_or_default())
    }

    /// Stored edge-table value for child `child` of `parent`; `r` and `s`
    /// must lie in the bags' intersection. Absent entries are zero.
    pub fn g_value(&self, parent: usize, child: usize, r: &FactSet, s: &FactSet) -> Result<BigUint> {
        let key = (self.mask_in_bag(parent, r)?, self.mask_in_bag(parent, s)?);
        let table = self.g_tables.get(&(parent, child)).ok_or_else(|| {
            Err::<(), _>(Error::Precondition(format!(
                "bag {child} is not a child of bag {parent}"
            )))
            .unwrap_err()
        })?;
        Ok(table.get(&key).cloned().unwrap_or_default())
    }

    /// Nonzero entries stored for the bag, in canonical order.
    pub fn f_entries(&self, bag: usize) -> Vec<(FactSet, FactSet, BigUint)> {
        let mut out: Vec<_> = self.f_tables[bag]
            .iter()
            .map(|(&(r, s), v)| (self.set_of_mask(bag, r), self.set_of_mask(bag, s), v.clone()))
            .collect();
        out.sort();
        out
    }

    /// Nonzero entries stored for a tree edge, in canonical order.
    pub fn g_entries(&self, parent: usize, child: usize) -> Vec<(FactSet, FactSet, BigUint)> {
        let mut out: Vec<_> = self
            .g_tables
            .get(&(parent, child))
            .into_iter()
            .flatten()
            .map(|(&(r, s), v)| {
                (
                    self.set_of_mask(parent, r),
                    self.set_of_mask(parent, s),
                    v.clone(),
                )
            })
            .collect();
        out.sort();
        out
    }

    /// Number of nonzero entries in the bag's table.
    pub fn table_size(&self, bag: usize) -> usize {
        self.f_tables[bag].len()
    }

    pub fn total_entries(&self) -> usize {
        self.f_tables.iter().map(HashMap::len).sum::<usize>()
            + self.g_tables.values().map(HashMap::len).sum::<usize>()
    }
}

fn local_mask(bag: &[FactId], facts: &FactSet) -> Option<u32> {
    let mut mask = 0u32;
    for id in facts {
        mask |= 1 << bag.binary_search(id).ok()?;
    }
    Some(mask)
}

/// Bags in children-before-parent order.
fn postorder(t: &RootedDecomposition) -> Vec<usize> {
    let mut order = Vec::with_capacity(t.bag_count());
    let mut stack = vec![t.root()];
    while let Some(b) = stack.pop() {
        order.push(b);
        stack.extend(t.children(b).iter().copied());
    }
    order.reverse();
    order
}

/// Counts the repairs containing no solution edge, i.e. the repairs
/// falsifying the query encoded in the hypergraph's solution edges. The
/// decomposition must be a valid tree decomposition of the hypergraph.
pub fn number_falsify(
    h: &LabeledHypergraph,
    t: &RootedDecomposition,
    opts: &CountOptions,
) -> Result<DpRun> {
    validate_detailed(t, h)?;
    let k_max = t.max_bag_size();
    if k_max > 32 {
        return Err(Error::BagTooLarge {
            size: k_max,
            limit: 32,
        });
    }
    if k_max > opts.max_bag && !opts.force {
        return Err(Error::BagTooLarge {
            size: k_max,
            limit: opts.max_bag,
        });
    }

    // per-bag local masks of the hyperedges contained in the bag
    let mut conflicts: Vec<Vec<u32>> = vec![Vec::new(); t.bag_count()];
    let mut solutions: Vec<Vec<u32>> = vec![Vec::new(); t.bag_count()];
    let mut bags_of_fact: Vec<Vec<usize>> = vec![Vec::new(); h.node_count()];
    for (i, bag) in t.bags().iter().enumerate() {
        for &v in bag {
            bags_of_fact[v].push(i);
        }
    }
    for edge in h.edges() {
        let first = *edge.facts.iter().next().expect("hyperedges are nonempty");
        for &b in &bags_of_fact[first] {
            if let Some(mask) = local_mask(t.bag(b), &edge.facts) {
                match edge.label {
                    EdgeLabel::Conflict => conflicts[b].push(mask),
                    EdgeLabel::Solution => solutions[b].push(mask),
                }
            }
        }
    }

    let mut f_tables: Vec<HashMap<(u32, u32), BigUint>> =
        vec![HashMap::new(); t.bag_count()];
    let mut g_tables: HashMap<(usize, usize), HashMap<(u32, u32), BigUint>> = HashMap::new();

    for &b in &postorder(t) {
        let bag = t.bag(b);
        let k = bag.len();
        let full = if k == 32 { u32::MAX } else { (1u32 << k) - 1 };

        // leaf case: one entry per consistent, solution-free r, with s the
        // largest set r max-repairs inside the bag
        let mut table: HashMap<(u32, u32), BigUint> = HashMap::new();
        'next_r: for r in 0..=u64::from(full) {
            let r = r as u32;
            let mut s = r;
            for &e in &conflicts[b] {
                let outside = e & !r;
                if outside == 0 {
                    continue 'next_r; // r itself is inconsistent
                }
                if outside.count_ones() == 1 {
                    s |= outside;
                }
            }
            if solutions[b].iter().any(|&e| e & !r == 0) {
                continue;
            }
            table.insert((r, s), BigUint::one());
        }

        for &c in t.children(b) {
            // fold the child's finished table into an edge table keyed by the
            // interface b ∩ c, in b-local coordinates
            let child_bag = t.bag(c);
            let mut to_parent: Vec<Option<u32>> = Vec::with_capacity(child_bag.len());
            let mut inter_c = 0u32;
            for (i, id) in child_bag.iter().enumerate() {
                match bag.binary_search(id) {
                    Ok(j) => {
                        to_parent.push(Some(1 << j));
                        inter_c |= 1 << i;
                    }
                    Err(_) => to_parent.push(None),
                }
            }
            let c_minus_b = {
                let child_full = if child_bag.len() == 32 {
                    u32::MAX
                } else {
                    (1u32 << child_bag.len()) - 1
                };
                child_full & !inter_c
            };
            let translate = |mask: u32| -> u32 {
                let mut out = 0;
                for (i, bit) in to_parent.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        out |= bit.expect("translated masks stay inside the interface");
                    }
                }
                out
            };
            let mut g: HashMap<(u32, u32), BigUint> = HashMap::new();
            for (&(rc, sc), v) in &f_tables[c] {
                if c_minus_b & !sc != 0 {
                    continue; // child's s must absorb everything below the interface
                }
                let key = (translate(rc & inter_c), translate(sc & inter_c));
                *g.entry(key).or_default() += v;
            }

            // group the edge table by its repair trace on the interface
            let mut by_trace: HashMap<u32, Vec<(u32, BigUint)>> = HashMap::new();
            for (&(rg, sg), v) in &g {
                by_trace.entry(rg).or_default().push((sg, v.clone()));
            }
            let inter_b = translate(inter_c);
            let mut next: HashMap<(u32, u32), BigUint> = HashMap::new();
            for (&(r, s_partial), v) in &table {
                if let Some(entries) = by_trace.get(&(r & inter_b)) {
                    for (sg, w) in entries {
                        *next.entry((r, s_partial | sg)).or_default() += v * w;
                    }
                }
            }
            table = next;
            g_tables.insert((b, c), g);
        }
        f_tables[b] = table;
    }

    let root = t.root();
    let root_full = {
        let k = t.bag(root).len();
        if k == 32 {
            u32::MAX
        } else {
            (1u32 << k) - 1
        }
    };
    let answer = f_tables[root]
        .iter()
        .filter(|(&(_, s), _)| s == root_full)
        .fold(BigUint::zero(), |acc, (_, v)| acc + v);

    Ok(DpRun {
        bags: t.bags().to_vec(),
        f_tables,
        g_tables,
        answer,
    })
}

/// Wall-clock milliseconds of the counting phases.
#[derive(Clone, Copy, Debug, Default)]
pub struct Timings {
    pub hypergraph_ms: u128,
    pub decompose_ms: u128,
    pub count_ms: u128,
}

/// Everything the counting pipeline produces for one instance.
pub struct CountOutcome {
    pub total: BigUint,
    pub falsifying: BigUint,
    pub satisfying: BigUint,
    pub hypergraph: LabeledHypergraph,
    pub decomposition: RootedDecomposition,
    pub run: DpRun,
    pub timings: Timings,
}

impl CountOutcome {
    /// True iff the query holds in every repair.
    pub fn cqa(&self) -> bool {
        self.falsifying.is_zero()
    }

    pub fn width_used(&self) -> usize {
        self.decomposition.width()
    }

    pub fn bag_count(&self) -> usize {
        self.decomposition.bag_count()
    }
}

/// Counts the repairs of the database and how they split on the query: the
/// falsifying count comes from the solution-conflict hypergraph, the total
/// from the same decomposition with the solution edges dropped.
pub fn count_satisfying(
    db: &Database,
    sigma: &[Constraint],
    q: &Query,
    heuristic: Heuristic,
    opts: &CountOptions,
) -> Result<CountOutcome> {
    validate_constraints(db, sigma)?;
    let mut timings = Timings::default();

    let start = Instant::now();
    let h = build_solution_conflict(db, sigma, q);
    timings.hypergraph_ms = start.elapsed().as_millis();

    let start = Instant::now();
    let t = decompose(&h, heuristic);
    timings.decompose_ms = start.elapsed().as_millis();

    let start = Instant::now();
    let run = number_falsify(&h, &t, opts)?;
    let falsifying = run.answer().clone();
    let total = if h.solution_edge_count() == 0 {
        falsifying.clone()
    } else {
        let conflict_only = LabeledHypergraph::new(
            h.node_count(),
            h.conflict_edges()
                .map(|facts| Hyperedge {
                    facts: facts.clone(),
                    label: EdgeLabel::Conflict,
                })
                .collect(),
        );
        number_falsify(&conflict_only, &t, opts)?.answer().clone()
    };
    timings.count_ms = start.elapsed().as_millis();

    let satisfying = &total - &falsifying;
    Ok(CountOutcome {
        total,
        falsifying,
        satisfying,
        hypergraph: h,
        decomposition: t,
        run,
        timings,
    })
}

/// True iff the query is consistently true: it holds in every repair.
pub fn cqa_decide(
    db: &Database,
    sigma: &[Constraint],
    q: &Query,
    heuristic: Heuristic,
    opts: &CountOptions,
) -> Result<bool> {
    Ok(count_satisfying(db, sigma, q, heuristic, opts)?.cqa())
}
