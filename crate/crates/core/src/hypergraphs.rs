//! Minimal conflicts, minimal query solutions, and the labeled hypergraph
//! combining both, together with its primal graph and independent sets.

use std::collections::{BTreeMap, BTreeSet};

use crate::graph::SimpleGraph;
use crate::relational::{
    match_atoms, Atom, Constraint, Database, DcAtom, Fact, FactId, FactSet, Query,
};
use crate::{Error, Result};

/// Whether a hyperedge is a subset-minimal constraint violation or a
/// subset-minimal query solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeLabel {
    Conflict,
    Solution,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Hyperedge {
    pub facts: FactSet,
    pub label: EdgeLabel,
}

/// Facts as nodes, hyperedges labeled conflict or solution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledHypergraph {
    node_count: usize,
    edges: Vec<Hyperedge>,
}

impl LabeledHypergraph {
    pub fn new(node_count: usize, mut edges: Vec<Hyperedge>) -> LabeledHypergraph {
        edges.sort();
        edges.dedup();
        LabeledHypergraph { node_count, edges }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[Hyperedge] {
        &self.edges
    }

    pub fn conflict_edges(&self) -> impl Iterator<Item = &FactSet> {
        self.edges
            .iter()
            .filter(|e| e.label == EdgeLabel::Conflict)
            .map(|e| &e.facts)
    }

    pub fn solution_edges(&self) -> impl Iterator<Item = &FactSet> {
        self.edges
            .iter()
            .filter(|e| e.label == EdgeLabel::Solution)
            .map(|e| &e.facts)
    }

    pub fn conflict_edge_count(&self) -> usize {
        self.conflict_edges().count()
    }

    pub fn solution_edge_count(&self) -> usize {
        self.solution_edges().count()
    }
}

/// Keeps only the subset-minimal sets.
fn minimize(candidates: BTreeSet<FactSet>) -> BTreeSet<FactSet> {
    let mut by_size: Vec<FactSet> = candidates.into_iter().collect();
    by_size.sort_by_key(FactSet::len);
    let mut kept: Vec<FactSet> = Vec::new();
    for set in by_size {
        if !kept.iter().any(|k| k.is_subset(&set)) {
            kept.push(set);
        }
    }
    kept.into_iter().collect()
}

fn fd_violating_pairs(
    db: &Database,
    relation: &str,
    lhs: &BTreeSet<usize>,
    rhs: &BTreeSet<usize>,
    out: &mut BTreeSet<FactSet>,
) {
    let mut groups: BTreeMap<Vec<&str>, Vec<FactId>> = BTreeMap::new();
    for (id, fact) in db.facts().iter().enumerate() {
        if fact.relation != relation {
            continue;
        }
        let key: Vec<&str> = lhs
            .iter()
            .filter_map(|&p| fact.tuple.get(p - 1).map(String::as_str))
            .collect();
        groups.entry(key).or_default().push(id);
    }
    for ids in groups.values() {
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                let (fa, fb) = (db.fact(a), db.fact(b));
                let rhs_agree = rhs
                    .iter()
                    .all(|&p| fa.tuple.get(p - 1) == fb.tuple.get(p - 1));
                if !rhs_agree {
                    out.insert(FactSet::from([a, b]));
                }
            }
        }
    }
}

fn dc_violating_sets(db: &Database, atoms: &[DcAtom], out: &mut BTreeSet<FactSet>) {
    let mut rel_atoms: Vec<Atom> = Vec::new();
    let mut eqs = Vec::new();
    let mut neqs = Vec::new();
    for a in atoms {
        match a {
            DcAtom::Rel(atom) => rel_atoms.push(atom.clone()),
            DcAtom::Eq(t, u) => eqs.push((t.clone(), u.clone())),
            DcAtom::Neq(t, u) => neqs.push((t.clone(), u.clone())),
        }
    }
    let candidates: Vec<(FactId, &Fact)> = db.facts().iter().enumerate().collect();
    match_atoms(&rel_atoms, &candidates, &eqs, &neqs, &mut |image, _| {
        out.insert(image.iter().copied().collect());
        true
    });
}

/// Exactly the subset-minimal inconsistent subsets of the database.
///
/// FDs and keys contribute violating pairs; denial constraints are matched by
/// backtracking unification of their relational atoms onto fact tuples, and
/// the image fact sets are collected. The union is then filtered to
/// subset-minimal sets.
pub fn minimal_conflicts(db: &Database, sigma: &[Constraint]) -> BTreeSet<FactSet> {
    let mut candidates = BTreeSet::new();
    for c in sigma {
        match c {
            Constraint::Fd { relation, lhs, rhs } => {
                fd_violating_pairs(db, relation, lhs, rhs, &mut candidates)
            }
            Constraint::Key { relation, positions } => {
                if let Some(arity) = db.arity(relation) {
                    let rhs: BTreeSet<usize> = (1..=arity).collect();
                    fd_violating_pairs(db, relation, positions, &rhs, &mut candidates)
                }
            }
            Constraint::Dc { atoms } => dc_violating_sets(db, atoms, &mut candidates),
        }
    }
    minimize(candidates)
}

/// Exactly the subset-minimal subsets of the database satisfying the query.
/// The identically-false query has none.
pub fn minimal_solutions(db: &Database, q: &Query) -> BTreeSet<FactSet> {
    let mut candidates = BTreeSet::new();
    let all: Vec<(FactId, &Fact)> = db.facts().iter().enumerate().collect();
    for d in q.disjuncts() {
        match_atoms(&d.atoms, &all, &[], &d.inequalities, &mut |image, _| {
            candidates.insert(image.iter().copied().collect());
            true
        });
    }
    minimize(candidates)
}

/// Builds the hypergraph whose nodes are the database facts, with the minimal
/// conflicts of `sigma` and the minimal solutions of `q` as labeled
/// hyperedges. With the identically-false query this is exactly the conflict
/// hypergraph.
pub fn build_solution_conflict(db: &Database, sigma: &[Constraint], q: &Query) -> LabeledHypergraph {
    let mut edges: Vec<Hyperedge> = minimal_conflicts(db, sigma)
        .into_iter()
        .map(|facts| Hyperedge {
            facts,
            label: EdgeLabel::Conflict,
        })
        .collect();
    edges.extend(minimal_solutions(db, q).into_iter().map(|facts| Hyperedge {
        facts,
        label: EdgeLabel::Solution,
    }));
    LabeledHypergraph::new(db.len(), edges)
}

/// Same nodes; an edge between each pair of distinct nodes sharing a
/// hyperedge.
pub fn primal_graph(h: &LabeledHypergraph) -> SimpleGraph {
    let mut g = SimpleGraph::new(h.node_count());
    for edge in h.edges() {
        let nodes: Vec<FactId> = edge.facts.iter().copied().collect();
        for (i, &u) in nodes.iter().enumerate() {
            for &v in &nodes[i + 1..] {
                g.add_edge(u, v);
            }
        }
    }
    g
}

fn edge_masks(h: &LabeledHypergraph) -> Vec<u64> {
    h.edges()
        .iter()
        .map(|e| e.facts.iter().fold(0u64, |m, &i| m | (1 << i)))
        .collect()
}

/// Size of the largest node set containing no hyperedge, by exhaustive
/// search. Refuses hypergraphs larger than `limit` nodes.
pub fn max_independent_set_size(h: &LabeledHypergraph, limit: usize) -> Result<usize> {
    let n = h.node_count();
    if n > limit || n >= 64 {
        return Err(Error::SizeGuard {
            what: "independent-set search",
            size: n,
            limit: limit.min(63),
        });
    }
    let masks = edge_masks(h);
    let mut best = 0;
    for set in 0u64..(1 << n) {
        let size = set.count_ones() as usize;
        if size > best && masks.iter().all(|&e| e & set != e) {
            best = size;
        }
    }
    Ok(best)
}

/// All maximal independent sets, in canonical order.
pub fn maximal_independent_sets(h: &LabeledHypergraph, limit: usize) -> Result<Vec<FactSet>> {
    let n = h.node_count();
    if n > limit || n >= 64 {
        return Err(Error::SizeGuard {
            what: "independent-set enumeration",
            size: n,
            limit: limit.min(63),
        });
    }
    let masks = edge_masks(h);
    let independent = |set: u64| masks.iter().all(|&e| e & set != e);
    let mut out = Vec::new();
    for set in 0u64..(1 << n) {
        if !independent(set) {
            continue;
        }
        let maximal = (0..n)
            .filter(|&v| set & (1 << v) == 0)
            .all(|v| !independent(set | (1 << v)));
        if maximal {
            out.push((0..n).filter(|&v| set & (1 << v) != 0).collect());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relational::{Disjunct, Term};

    fn fact(r: &str, tuple: &[&str]) -> Fact {
        Fact::new(r, tuple.to_vec())
    }

    fn running_example() -> (Database, Vec<Constraint>) {
        let db = Database::new(vec![
            fact("R", &["a", "b"]),
            fact("R", &["c", "b"]),
            fact("R", &["c", "d"]),
            fact("R", &["e", "d"]),
            fact("R", &["e", "f"]),
        ])
        .unwrap();
        let sigma = vec![Constraint::key("R", [1]), Constraint::key("R", [2])];
        (db, sigma)
    }

    fn grounded_query(db: &Database, r: &str, tuple: &[&str]) -> Query {
        let _ = db;
        Query::union(vec![Disjunct::new(
            vec![Atom::new(
                r,
                tuple.iter().map(|c| Term::constant(*c)).collect(),
            )],
            vec![],
        )])
        .unwrap()
    }

    #[test]
    fn running_example_conflicts_form_a_path() {
        let (db, sigma) = running_example();
        let conflicts = minimal_conflicts(&db, &sigma);
        // facts in canonical order: R(a,b)=0, R(c,b)=1, R(c,d)=2, R(e,d)=3, R(e,f)=4
        let expected: BTreeSet<FactSet> = [
            FactSet::from([0, 1]),
            FactSet::from([1, 2]),
            FactSet::from([2, 3]),
            FactSet::from([3, 4]),
        ]
        .into();
        assert_eq!(conflicts, expected);
    }

    #[test]
    fn consistent_database_has_no_conflicts() {
        let db = Database::new(vec![fact("R", &["a", "b"]), fact("R", &["c", "d"])]).unwrap();
        let sigma = vec![Constraint::key("R", [1])];
        assert!(minimal_conflicts(&db, &sigma).is_empty());
    }

    #[test]
    fn dc_conflict_pairs_covalued_facts() {
        let db = Database::new(vec![fact("R", &["1"]), fact("S", &["1"]), fact("S", &["2"])])
            .unwrap();
        let dc = Constraint::dc(vec![
            DcAtom::Rel(Atom::new("R", vec![Term::var("x")])),
            DcAtom::Rel(Atom::new("S", vec![Term::var("x")])),
        ])
        .unwrap();
        let conflicts = minimal_conflicts(&db, &[dc]);
        let r1 = db.fact_id(&fact("R", &["1"])).unwrap();
        let s1 = db.fact_id(&fact("S", &["1"])).unwrap();
        assert_eq!(conflicts, BTreeSet::from([FactSet::from([r1, s1])]));
    }

    #[test]
    fn grounded_query_has_singleton_solution() {
        let (db, _) = running_example();
        let q = grounded_query(&db, "R", &["a", "b"]);
        let solutions = minimal_solutions(&db, &q);
        assert_eq!(solutions, BTreeSet::from([FactSet::from([0])]));
    }

    #[test]
    fn bipartite_family_has_all_pairs_as_solutions() {
        let n = 3;
        let mut facts = Vec::new();
        for i in 1..=n {
            facts.push(fact("R", &[&i.to_string()]));
            facts.push(fact("S", &[&i.to_string()]));
        }
        let db = Database::new(facts).unwrap();
        let q = Query::union(vec![Disjunct::new(
            vec![
                Atom::new("R", vec![Term::var("x")]),
                Atom::new("S", vec![Term::var("y")]),
            ],
            vec![],
        )])
        .unwrap();
        let solutions = minimal_solutions(&db, &q);
        assert_eq!(solutions.len(), n * n);
        assert!(solutions.iter().all(|s| s.len() == 2));
    }

    #[test]
    fn chain_family_has_no_solutions() {
        // R(i,*) and S(*,i) never join through T's constants
        let db = Database::new(vec![
            fact("R", &["1", "*"]),
            fact("R", &["2", "*"]),
            fact("S", &["*", "1"]),
            fact("S", &["*", "2"]),
            fact("T", &["neg1"]),
            fact("T", &["neg2"]),
        ])
        .unwrap();
        let q = Query::union(vec![Disjunct::new(
            vec![
                Atom::new("R", vec![Term::var("x"), Term::var("y")]),
                Atom::new("S", vec![Term::var("y"), Term::var("z")]),
                Atom::new("T", vec![Term::var("z")]),
            ],
            vec![],
        )])
        .unwrap();
        assert!(minimal_solutions(&db, &q).is_empty());
    }

    #[test]
    fn solution_conflict_of_running_example() {
        let (db, sigma) = running_example();
        let q = grounded_query(&db, "R", &["a", "b"]);
        let h = build_solution_conflict(&db, &sigma, &q);
        assert_eq!(h.node_count(), 5);
        assert_eq!(h.conflict_edge_count(), 4);
        assert_eq!(h.solution_edge_count(), 1);

        let h_bot = build_solution_conflict(&db, &sigma, &Query::False);
        assert_eq!(h_bot.solution_edge_count(), 0);
        assert_eq!(h_bot.conflict_edge_count(), 4);
    }

    #[test]
    fn primal_graph_of_a_triangle_edge() {
        let h = LabeledHypergraph::new(
            3,
            vec![Hyperedge {
                facts: FactSet::from([0, 1, 2]),
                label: EdgeLabel::Conflict,
            }],
        );
        let g = primal_graph(&h);
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn primal_graph_of_running_example_is_the_path() {
        let (db, sigma) = running_example();
        let q = grounded_query(&db, "R", &["a", "b"]);
        let h = build_solution_conflict(&db, &sigma, &q);
        let g = primal_graph(&h);
        // the singleton solution edge adds no primal edges
        assert_eq!(g.edges(), vec![(0, 1), (1, 2), (2, 3), (3, 4)]);
    }

    #[test]
    fn independent_set_sizes_on_running_example() {
        let (db, sigma) = running_example();
        let h_bot = build_solution_conflict(&db, &sigma, &Query::False);
        assert_eq!(max_independent_set_size(&h_bot, 12).unwrap(), 3);
        let q = grounded_query(&db, "R", &["a", "b"]);
        let h = build_solution_conflict(&db, &sigma, &q);
        assert_eq!(max_independent_set_size(&h, 12).unwrap(), 2);
    }

    #[test]
    fn edgeless_hypergraph_is_fully_independent() {
        let h = LabeledHypergraph::new(4, vec![]);
        assert_eq!(max_independent_set_size(&h, 12).unwrap(), 4);
    }

    #[test]
    fn size_guard_refuses_large_hypergraphs() {
        let h = LabeledHypergraph::new(13, vec![]);
        assert!(matches!(
            max_independent_set_size(&h, 12),
            Err(Error::SizeGuard { .. })
        ));
    }
}
