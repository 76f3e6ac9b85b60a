//! The fact-pair first-order structure behind the MSO route to consistent
//! query answering: q-linked atom pairs, q-consistent fact pairs, the
//! structure's Gaifman graph and its treewidth, and emission of the MSO
//! formula as text.
//!
//! Unlike the solution-conflict hypergraph, this structure only ever relates
//! bounded-size fact tuples, so building it stays polynomial even when the
//! query is part of the input.

use std::collections::{BTreeMap, BTreeSet};

use crate::graph::SimpleGraph;
use crate::hypergraphs::{build_solution_conflict, minimal_conflicts, primal_graph};
use crate::relational::{Constraint, Database, Disjunct, FactId, FactSet, Query, Term};
use crate::treedec::{decompose, decompose_graph, exact_treewidth, Heuristic};
use crate::Result;

/// Which inconsistency relation the structure carries: binary `depfails` for
/// pure FD/key sets, or k-ary for sets containing denial constraints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SigmaKind {
    Fd,
    Dc(usize),
}

impl SigmaKind {
    /// FD/key-only sets use the binary encoding; anything containing a
    /// denial constraint uses the k-ary one, with k the largest relational
    /// atom count across the constraints (at least 2).
    pub fn of_constraints(sigma: &[Constraint]) -> SigmaKind {
        let all_fd = sigma
            .iter()
            .all(|c| !matches!(c, Constraint::Dc { .. }));
        if all_fd {
            SigmaKind::Fd
        } else {
            let k = sigma
                .iter()
                .map(Constraint::relational_atom_count)
                .max()
                .unwrap_or(2);
            SigmaKind::Dc(k.max(2))
        }
    }

    pub fn depfails_arity(&self) -> usize {
        match *self {
            SigmaKind::Fd => 2,
            SigmaKind::Dc(k) => k,
        }
    }
}

/// Per disjunct, the atom-index pairs that are q-linked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinkIndex {
    pub per_disjunct: Vec<BTreeSet<(usize, usize)>>,
}

impl LinkIndex {
    pub fn of_query(q: &Query) -> LinkIndex {
        LinkIndex {
            per_disjunct: q.disjuncts().iter().map(q_linked).collect(),
        }
    }
}

/// Atom-index pairs `(i, j)` of the disjunct that are q-linked: equal
/// indices, a shared variable, or an inequality atom bridging a variable of
/// each. Reflexive and symmetric.
pub fn q_linked(d: &Disjunct) -> BTreeSet<(usize, usize)> {
    let vars: Vec<BTreeSet<&str>> = d.atoms.iter().map(|a| a.variables()).collect();
    let mut out = BTreeSet::new();
    for i in 0..d.atoms.len() {
        for j in 0..d.atoms.len() {
            let linked = i == j
                || !vars[i].is_disjoint(&vars[j])
                || d.inequalities.iter().any(|(t, u)| {
                    match (t.as_var(), u.as_var()) {
                        (Some(x), Some(y)) => {
                            (vars[i].contains(x) && vars[j].contains(y))
                                || (vars[i].contains(y) && vars[j].contains(x))
                        }
                        _ => false,
                    }
                });
            if linked {
                out.insert((i, j));
            }
        }
    }
    out
}

fn unify(terms: &[Term], tuple: &[String], h: &mut BTreeMap<String, String>) -> bool {
    if terms.len() != tuple.len() {
        return false;
    }
    for (t, value) in terms.iter().zip(tuple) {
        match t {
            Term::Const(c) => {
                if c != value {
                    return false;
                }
            }
            Term::Var(x) => match h.get(x) {
                Some(bound) => {
                    if bound != value {
                        return false;
                    }
                }
                None => {
                    h.insert(x.clone(), value.clone());
                }
            },
        }
    }
    true
}

/// True iff atoms `i` and `j` of the disjunct are q-linked and some
/// assignment maps atom `i` onto `f_i`'s tuple and atom `j` onto `f_j`'s
/// while respecting every inequality atom whose both sides are bound.
pub fn q_consistent(
    f_i: &crate::relational::Fact,
    f_j: &crate::relational::Fact,
    d: &Disjunct,
    i: usize,
    j: usize,
) -> bool {
    if !q_linked(d).contains(&(i, j)) {
        return false;
    }
    if d.atoms[i].relation != f_i.relation || d.atoms[j].relation != f_j.relation {
        return false;
    }
    let mut h = BTreeMap::new();
    if !unify(&d.atoms[i].terms, &f_i.tuple, &mut h) {
        return false;
    }
    if !unify(&d.atoms[j].terms, &f_j.tuple, &mut h) {
        return false;
    }
    let value = |t: &Term| -> Option<String> {
        match t {
            Term::Const(c) => Some(c.clone()),
            Term::Var(x) => h.get(x).cloned(),
        }
    };
    d.inequalities.iter().all(|(t, u)| match (value(t), value(u)) {
        (Some(a), Some(b)) => a != b,
        _ => true, // only inequalities over bound terms constrain the pair
    })
}

/// The first-order structure over the facts of a database: the k-ary
/// inconsistency relation (kept compactly as the minimal conflicts) plus the
/// q-consistent fact pairs for every q-linked atom pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaifmanStructure {
    node_count: usize,
    pub kind: SigmaKind,
    /// Subset-minimal inconsistent fact sets; the `depfails` tuples are all
    /// fact k-tuples whose underlying set contains one of these.
    pub conflicts: BTreeSet<FactSet>,
    /// `(disjunct, i, j)` over q-linked pairs, mapped to q-consistent fact
    /// pairs.
    pub linked: BTreeMap<(usize, usize, usize), BTreeSet<(FactId, FactId)>>,
}

impl GaifmanStructure {
    pub fn node_count(&self) -> usize {
        self.node_count
    }
}

/// Builds the structure for the instance. The conflicts are those of the
/// whole constraint set; mixed FD+DC sets use the k-ary encoding.
pub fn build_structure(db: &Database, sigma: &[Constraint], q: &Query) -> GaifmanStructure {
    let kind = SigmaKind::of_constraints(sigma);
    let conflicts = minimal_conflicts(db, sigma);
    let mut linked = BTreeMap::new();
    for (ell, d) in q.disjuncts().iter().enumerate() {
        for &(i, j) in &q_linked(d) {
            let mut pairs = BTreeSet::new();
            for (fi, fact_i) in db.facts().iter().enumerate() {
                if fact_i.relation != d.atoms[i].relation {
                    continue;
                }
                for (fj, fact_j) in db.facts().iter().enumerate() {
                    if q_consistent(fact_i, fact_j, d, i, j) {
                        pairs.insert((fi, fj));
                    }
                }
            }
            linked.insert((ell, i, j), pairs);
        }
    }
    GaifmanStructure {
        node_count: db.len(),
        kind,
        conflicts,
        linked,
    }
}

/// The Gaifman graph: facts as vertices, an edge between distinct facts that
/// co-occur in some relation tuple. For `depfails` of arity k, facts `a`, `b`
/// co-occur in a violating k-tuple exactly when some minimal conflict `e`
/// satisfies `|e ∪ {a, b}| ≤ k`.
pub fn gaifman_graph(s: &GaifmanStructure) -> SimpleGraph {
    let n = s.node_count();
    let k = s.kind.depfails_arity();
    let mut g = SimpleGraph::new(n);
    for a in 0..n {
        for b in a + 1..n {
            let covered = s.conflicts.iter().any(|e| {
                let extra = usize::from(!e.contains(&a)) + usize::from(!e.contains(&b));
                e.len() + extra <= k
            });
            if covered {
                g.add_edge(a, b);
            }
        }
    }
    for pairs in s.linked.values() {
        for &(a, b) in pairs {
            g.add_edge(a, b);
        }
    }
    g
}

fn sexpr_vars(prefix: &str, n: usize) -> String {
    (1..=n)
        .map(|i| format!("{prefix}{i}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Emits the MSO formula deciding CQA over the structure's vocabulary, as an
/// S-expression. The output depends only on the constraint kind and the
/// query, never on a database.
pub fn emit_mso(kind: SigmaKind, q: &Query) -> String {
    let k = kind.depfails_arity();
    let mut out = String::new();

    // (1) consistency of the candidate repair T
    out.push_str(&format!(
        "(define (sat T)\n  (forall ({vars})\n    (implies (and {members})\n             (not (depfails {vars})))))\n",
        vars = sexpr_vars("x", k),
        members = (1..=k)
            .map(|i| format!("(T x{i})"))
            .collect::<Vec<_>>()
            .join(" "),
    ));

    // (2) one query-satisfaction formula per disjunct
    for (ell, d) in q.disjuncts().iter().enumerate() {
        let s = d.atoms.len();
        let mut conjuncts: Vec<String> = (1..=s).map(|i| format!("(T x{i})")).collect();
        for &(i, j) in &q_linked(d) {
            conjuncts.push(format!("(linked-{}-{}-{} x{} x{})", ell + 1, i + 1, j + 1, i + 1, j + 1));
        }
        out.push_str(&format!(
            "(define (qsat-{n} T)\n  (exists ({vars})\n    (and {body})))\n",
            n = ell + 1,
            vars = sexpr_vars("x", s),
            body = conjuncts.join(" "),
        ));
    }

    // (3) strict set inclusion and (4) subset-maximality
    out.push_str(
        "(define (proper-superset T U)\n  (and (forall (x) (implies (T x) (U x)))\n       (exists (y) (and (not (T y)) (U y)))))\n",
    );
    out.push_str(
        "(define (repair T)\n  (and (sat T)\n       (forall-set (U)\n         (or (not (proper-superset T U)) (not (sat U))))))\n",
    );

    let disjunction = (1..=q.disjuncts().len())
        .map(|n| format!("(qsat-{n} T)"))
        .collect::<Vec<_>>()
        .join(" ");
    out.push_str(&format!(
        "(formula\n  (forall-set (T)\n    (implies (repair T) (or {disjunction}))))\n"
    ));
    out
}

/// Treewidth of both graph representations: heuristic upper bounds always,
/// exact values when each connected component fits the exact solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TwMeasures {
    pub twh_upper: usize,
    pub twg_upper: usize,
    pub twh_exact: Option<usize>,
    pub twg_exact: Option<usize>,
}

pub fn tw_measures(db: &Database, sigma: &[Constraint], q: &Query) -> Result<TwMeasures> {
    let h = build_solution_conflict(db, sigma, q);
    let hg = primal_graph(&h);
    let twh_upper = decompose(&h, Heuristic::MinFill).width();
    let twh_exact = exact_treewidth(&hg, 12).ok();

    let s = build_structure(db, sigma, q);
    let gg = gaifman_graph(&s);
    let twg_upper = decompose_graph(&gg, Heuristic::MinFill).width();
    let twg_exact = exact_treewidth(&gg, 12).ok();

    Ok(TwMeasures {
        twh_upper,
        twg_upper,
        twh_exact,
        twg_exact,
    })
}
