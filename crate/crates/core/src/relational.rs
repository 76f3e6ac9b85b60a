//! The relational data model: terms, facts, databases, queries, constraints,
//! and direct (non-repair) evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::{Error, Result};

/// Index of a fact within a [`Database`]'s canonical order.
pub type FactId = usize;

/// A set of facts, identified by their canonical indices in a database.
pub type FactSet = BTreeSet<FactId>;

/// A term is either a variable or a constant. Variable and constant names
/// live in disjoint lexical spaces (the text format prefixes variables
/// with `?`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Term {
        Term::Const(name.into())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

/// A relational atom `R(t1, ..., tk)` over terms.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub relation: String,
    pub terms: Vec<Term>,
}

impl Atom {
    pub fn new(relation: impl Into<String>, terms: Vec<Term>) -> Atom {
        Atom {
            relation: relation.into(),
            terms,
        }
    }

    pub fn variables(&self) -> BTreeSet<&str> {
        self.terms.iter().filter_map(Term::as_var).collect()
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, ")")
    }
}

/// A ground relational atom: a relation name and a tuple of constants.
///
/// Facts order by relation name, then tuple, lexicographically. This order is
/// the canonical order used wherever determinism matters (bag-local bitmask
/// indexing, child ordering, output listing).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub relation: String,
    pub tuple: Vec<String>,
}

impl Fact {
    pub fn new(relation: impl Into<String>, tuple: Vec<impl Into<String>>) -> Fact {
        Fact {
            relation: relation.into(),
            tuple: tuple.into_iter().map(Into::into).collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.tuple.len()
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.relation, self.tuple.join(","))
    }
}

/// A finite, duplicate-free set of facts in canonical order.
///
/// Relation arities are inferred from the first occurrence and enforced
/// database-wide.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Database {
    facts: Vec<Fact>,
    arities: BTreeMap<String, usize>,
}

impl Database {
    /// Builds a database from facts, collapsing duplicates and checking that
    /// every relation is used with a single arity.
    pub fn new(facts: impl IntoIterator<Item = Fact>) -> Result<Database> {
        let mut arities = BTreeMap::new();
        let mut set = BTreeSet::new();
        for fact in facts {
            let arity = *arities
                .entry(fact.relation.clone())
                .or_insert_with(|| fact.arity());
            if arity != fact.arity() {
                return Err(Error::ArityMismatch {
                    relation: fact.relation.clone(),
                    expected: arity,
                    found: fact.arity(),
                });
            }
            set.insert(fact);
        }
        Ok(Database {
            facts: set.into_iter().collect(),
            arities,
        })
    }

    pub fn empty() -> Database {
        Database {
            facts: Vec::new(),
            arities: BTreeMap::new(),
        }
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn fact(&self, id: FactId) -> &Fact {
        &self.facts[id]
    }

    /// Canonical index of a fact, if present.
    pub fn fact_id(&self, fact: &Fact) -> Option<FactId> {
        self.facts.binary_search(fact).ok()
    }

    pub fn arity(&self, relation: &str) -> Option<usize> {
        self.arities.get(relation).copied()
    }

    /// The set of constants appearing in the facts.
    pub fn adom(&self) -> BTreeSet<&str> {
        self.facts
            .iter()
            .flat_map(|f| f.tuple.iter().map(String::as_str))
            .collect()
    }

    /// All fact ids: `0..len()`.
    pub fn all_ids(&self) -> FactSet {
        (0..self.facts.len()).collect()
    }

    pub fn subset_facts<'a>(&'a self, ids: &FactSet) -> Vec<&'a Fact> {
        ids.iter().map(|&i| &self.facts[i]).collect()
    }
}

/// One conjunct of a union query: relational atoms plus inequality atoms
/// `t != u`, with implicit existential quantification of all variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Disjunct {
    pub atoms: Vec<Atom>,
    pub inequalities: Vec<(Term, Term)>,
}

impl Disjunct {
    pub fn new(atoms: Vec<Atom>, inequalities: Vec<(Term, Term)>) -> Disjunct {
        Disjunct {
            atoms,
            inequalities,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.atoms.is_empty() {
            return Err(Error::EmptyDisjunct);
        }
        let bound: BTreeSet<&str> = self.atoms.iter().flat_map(|a| a.variables()).collect();
        for (t, u) in &self.inequalities {
            for term in [t, u] {
                if let Term::Var(v) = term {
                    if !bound.contains(v.as_str()) {
                        return Err(Error::UnsafeVariable {
                            variable: v.clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// A Boolean query: a union of conjunctive queries with inequality, or the
/// distinguished identically-false query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Query {
    /// The query no database satisfies. Counting the repairs falsifying it
    /// counts all repairs.
    False,
    Union(Vec<Disjunct>),
}

impl Query {
    pub fn union(disjuncts: Vec<Disjunct>) -> Result<Query> {
        if disjuncts.is_empty() {
            return Err(Error::EmptyDisjunct);
        }
        for d in &disjuncts {
            d.validate()?;
        }
        Ok(Query::Union(disjuncts))
    }

    pub fn disjuncts(&self) -> &[Disjunct] {
        match self {
            Query::False => &[],
            Query::Union(ds) => ds,
        }
    }

    /// Total number of relational atoms across all disjuncts.
    pub fn atom_count(&self) -> usize {
        self.disjuncts().iter().map(|d| d.atoms.len()).sum()
    }

    /// Constants appearing anywhere in the query.
    pub fn adom(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        for d in self.disjuncts() {
            for a in &d.atoms {
                for t in &a.terms {
                    if let Term::Const(c) = t {
                        out.insert(c.as_str());
                    }
                }
            }
            for (t, u) in &d.inequalities {
                for term in [t, u] {
                    if let Term::Const(c) = term {
                        out.insert(c.as_str());
                    }
                }
            }
        }
        out
    }
}

/// One atom of a denial constraint body.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DcAtom {
    Rel(Atom),
    Eq(Term, Term),
    Neq(Term, Term),
}

/// An anti-monotonic constraint: functional dependency, key, or denial
/// constraint. Positions in FDs and keys are 1-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Constraint {
    Fd {
        relation: String,
        lhs: BTreeSet<usize>,
        rhs: BTreeSet<usize>,
    },
    Key {
        relation: String,
        positions: BTreeSet<usize>,
    },
    Dc {
        atoms: Vec<DcAtom>,
    },
}

impl Constraint {
    pub fn key(relation: impl Into<String>, positions: impl IntoIterator<Item = usize>) -> Constraint {
        Constraint::Key {
            relation: relation.into(),
            positions: positions.into_iter().collect(),
        }
    }

    pub fn fd(
        relation: impl Into<String>,
        lhs: impl IntoIterator<Item = usize>,
        rhs: impl IntoIterator<Item = usize>,
    ) -> Constraint {
        Constraint::Fd {
            relation: relation.into(),
            lhs: lhs.into_iter().collect(),
            rhs: rhs.into_iter().collect(),
        }
    }

    /// Builds a denial constraint, checking that it has at least one
    /// relational atom and that all (in)equality variables are safe.
    pub fn dc(atoms: Vec<DcAtom>) -> Result<Constraint> {
        let bound: BTreeSet<&str> = atoms
            .iter()
            .filter_map(|a| match a {
                DcAtom::Rel(atom) => Some(atom),
                _ => None,
            })
            .flat_map(|a| a.variables())
            .collect();
        if bound.is_empty() && !atoms.iter().any(|a| matches!(a, DcAtom::Rel(_))) {
            return Err(Error::Precondition(
                "a denial constraint needs at least one relational atom".into(),
            ));
        }
        for atom in &atoms {
            let (t, u) = match atom {
                DcAtom::Eq(t, u) | DcAtom::Neq(t, u) => (t, u),
                DcAtom::Rel(_) => continue,
            };
            for term in [t, u] {
                if let Term::Var(v) = term {
                    if !bound.contains(v.as_str()) {
                        return Err(Error::UnsafeVariable {
                            variable: v.clone(),
                        });
                    }
                }
            }
        }
        Ok(Constraint::Dc { atoms })
    }

    /// Number of relational atoms: 2 for FDs and keys, the relational atom
    /// count for denial constraints.
    pub fn relational_atom_count(&self) -> usize {
        match self {
            Constraint::Fd { .. } | Constraint::Key { .. } => 2,
            Constraint::Dc { atoms } => atoms
                .iter()
                .filter(|a| matches!(a, DcAtom::Rel(_)))
                .count(),
        }
    }
}

/// Checks that FD/key positions are within the relation arities known to the
/// database. Relations absent from the database are left unchecked (their
/// arity is not yet known).
pub fn validate_constraints(db: &Database, sigma: &[Constraint]) -> Result<()> {
    for c in sigma {
        let (relation, positions): (&str, Vec<usize>) = match c {
            Constraint::Fd { relation, lhs, rhs } => {
                (relation, lhs.iter().chain(rhs.iter()).copied().collect())
            }
            Constraint::Key { relation, positions } => {
                (relation, positions.iter().copied().collect())
            }
            Constraint::Dc { atoms } => {
                for a in atoms {
                    if let DcAtom::Rel(atom) = a {
                        if let Some(ar) = db.arity(&atom.relation) {
                            if ar != atom.terms.len() {
                                return Err(Error::ArityMismatch {
                                    relation: atom.relation.clone(),
                                    expected: ar,
                                    found: atom.terms.len(),
                                });
                            }
                        }
                    }
                }
                continue;
            }
        };
        if let Some(arity) = db.arity(relation) {
            for p in positions {
                if p == 0 || p > arity {
                    return Err(Error::PositionOutOfRange {
                        relation: relation.to_string(),
                        position: p,
                        arity,
                    });
                }
            }
        }
    }
    Ok(())
}

/// A mapping from variable names to constants, extended to be the identity
/// on constants.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment {
    map: BTreeMap<String, String>,
}

impl Assignment {
    pub fn new() -> Assignment {
        Assignment::default()
    }

    pub fn get(&self, var: &str) -> Option<&str> {
        self.map.get(var).map(String::as_str)
    }

    /// Image of a term: the bound constant for a variable, the constant
    /// itself otherwise.
    pub fn apply<'a>(&'a self, term: &'a Term) -> Option<&'a str> {
        match term {
            Term::Const(c) => Some(c),
            Term::Var(v) => self.get(v),
        }
    }

    /// Binds `var` to `value`; fails on a clash with an existing binding.
    fn bind(&mut self, var: &str, value: &str) -> bool {
        match self.map.get(var) {
            Some(old) => old == value,
            None => {
                self.map.insert(var.to_string(), value.to_string());
                true
            }
        }
    }
}

/// Backtracking match of a sequence of relational atoms onto candidate facts.
///
/// `candidates` pairs each usable fact with its id; distinct atoms may map to
/// the same fact. For every complete assignment satisfying `eqs` and `neqs`,
/// `on_match` receives the image fact ids (one per atom, in atom order) and
/// the assignment; returning `false` stops the search.
pub(crate) fn match_atoms<F>(
    atoms: &[Atom],
    candidates: &[(FactId, &Fact)],
    eqs: &[(Term, Term)],
    neqs: &[(Term, Term)],
    on_match: &mut F,
) -> bool
where
    F: FnMut(&[FactId], &Assignment) -> bool,
{
    fn step<F>(
        atoms: &[Atom],
        candidates: &[(FactId, &Fact)],
        eqs: &[(Term, Term)],
        neqs: &[(Term, Term)],
        depth: usize,
        image: &mut Vec<FactId>,
        assignment: &mut Assignment,
        on_match: &mut F,
    ) -> bool
    where
        F: FnMut(&[FactId], &Assignment) -> bool,
    {
        if depth == atoms.len() {
            for (t, u) in eqs {
                match (assignment.apply(t), assignment.apply(u)) {
                    (Some(a), Some(b)) if a == b => {}
                    _ => return true,
                }
            }
            for (t, u) in neqs {
                match (assignment.apply(t), assignment.apply(u)) {
                    (Some(a), Some(b)) if a != b => {}
                    _ => return true,
                }
            }
            return on_match(image, assignment);
        }
        let atom = &atoms[depth];
        'facts: for &(id, fact) in candidates {
            if fact.relation != atom.relation || fact.arity() != atom.terms.len() {
                continue;
            }
            let saved = assignment.clone();
            for (term, value) in atom.terms.iter().zip(&fact.tuple) {
                let ok = match term {
                    Term::Const(c) => c == value,
                    Term::Var(v) => assignment.bind(v, value),
                };
                if !ok {
                    *assignment = saved;
                    continue 'facts;
                }
            }
            image.push(id);
            let keep_going = step(
                atoms, candidates, eqs, neqs, depth + 1, image, assignment, on_match,
            );
            image.pop();
            *assignment = saved;
            if !keep_going {
                return false;
            }
        }
        true
    }

    let mut image = Vec::with_capacity(atoms.len());
    let mut assignment = Assignment::new();
    step(
        atoms,
        candidates,
        eqs,
        neqs,
        0,
        &mut image,
        &mut assignment,
        on_match,
    )
}

fn disjunct_holds(disjunct: &Disjunct, candidates: &[(FactId, &Fact)]) -> bool {
    let mut found = false;
    match_atoms(
        &disjunct.atoms,
        candidates,
        &[],
        &disjunct.inequalities,
        &mut |_, _| {
            found = true;
            false
        },
    );
    found
}

fn check_query_arities(db: &Database, q: &Query) -> Result<()> {
    for d in q.disjuncts() {
        for atom in &d.atoms {
            if let Some(arity) = db.arity(&atom.relation) {
                if arity != atom.terms.len() {
                    return Err(Error::ArityMismatch {
                        relation: atom.relation.clone(),
                        expected: arity,
                        found: atom.terms.len(),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Tarskian evaluation of a query over the full database.
pub fn evaluate_query(db: &Database, q: &Query) -> Result<bool> {
    check_query_arities(db, q)?;
    let candidates: Vec<(FactId, &Fact)> = db.facts().iter().enumerate().collect();
    Ok(q.disjuncts().iter().any(|d| disjunct_holds(d, &candidates)))
}

/// Evaluation restricted to a subset of the database's facts.
pub fn evaluate_query_on(db: &Database, subset: &FactSet, q: &Query) -> Result<bool> {
    check_query_arities(db, q)?;
    let candidates: Vec<(FactId, &Fact)> = subset.iter().map(|&i| (i, db.fact(i))).collect();
    Ok(q.disjuncts().iter().any(|d| disjunct_holds(d, &candidates)))
}

fn fd_holds(facts: &[&Fact], relation: &str, lhs: &BTreeSet<usize>, rhs: &BTreeSet<usize>) -> bool {
    let rel_facts: Vec<&&Fact> = facts.iter().filter(|f| f.relation == relation).collect();
    for (i, a) in rel_facts.iter().enumerate() {
        for b in &rel_facts[i + 1..] {
            let agree = |positions: &BTreeSet<usize>| {
                positions
                    .iter()
                    .all(|&p| a.tuple.get(p - 1) == b.tuple.get(p - 1))
            };
            if agree(lhs) && !agree(rhs) {
                return false;
            }
        }
    }
    true
}

fn dc_holds(facts: &[&Fact], atoms: &[DcAtom]) -> bool {
    let mut rel_atoms = Vec::new();
    let mut eqs = Vec::new();
    let mut neqs = Vec::new();
    for a in atoms {
        match a {
            DcAtom::Rel(atom) => rel_atoms.push(atom.clone()),
            DcAtom::Eq(t, u) => eqs.push((t.clone(), u.clone())),
            DcAtom::Neq(t, u) => neqs.push((t.clone(), u.clone())),
        }
    }
    let candidates: Vec<(FactId, &Fact)> = facts.iter().copied().enumerate().collect();
    let mut violated = false;
    match_atoms(&rel_atoms, &candidates, &eqs, &neqs, &mut |_, _| {
        violated = true;
        false
    });
    !violated
}

fn constraint_holds(facts: &[&Fact], c: &Constraint) -> bool {
    match c {
        Constraint::Fd { relation, lhs, rhs } => fd_holds(facts, relation, lhs, rhs),
        Constraint::Key { relation, positions } => {
            let arity = facts
                .iter()
                .find(|f| f.relation == *relation)
                .map(|f| f.arity());
            match arity {
                Some(ar) => fd_holds(facts, relation, positions, &(1..=ar).collect()),
                None => true,
            }
        }
        Constraint::Dc { atoms } => dc_holds(facts, atoms),
    }
}

/// True iff the fact set violates none of the constraints.
pub fn satisfies_constraints<'a>(
    facts: impl IntoIterator<Item = &'a Fact>,
    sigma: &[Constraint],
) -> bool {
    let facts: Vec<&Fact> = facts.into_iter().collect();
    sigma.iter().all(|c| constraint_holds(&facts, c))
}

/// [`satisfies_constraints`] over a subset of a database.
pub fn subset_satisfies(db: &Database, subset: &FactSet, sigma: &[Constraint]) -> bool {
    satisfies_constraints(subset.iter().map(|&i| db.fact(i)), sigma)
}

/// Partitions the database into blocks: subset-maximal sets of key-equal
/// facts under a set of primary keys. Facts of relations without a primary
/// key form singleton blocks.
pub fn key_blocks(db: &Database, sigma: &[Constraint]) -> Result<Vec<FactSet>> {
    let mut pk: BTreeMap<&str, &BTreeSet<usize>> = BTreeMap::new();
    for c in sigma {
        match c {
            Constraint::Key { relation, positions } => {
                if pk.insert(relation, positions).is_some() {
                    return Err(Error::NotAPrimaryKeySet {
                        relation: relation.clone(),
                    });
                }
            }
            _ => {
                return Err(Error::Precondition(
                    "key_blocks expects a set of primary keys only".into(),
                ))
            }
        }
    }
    let mut blocks: BTreeMap<(String, Vec<String>), FactSet> = BTreeMap::new();
    let mut singletons: Vec<FactSet> = Vec::new();
    for (id, fact) in db.facts().iter().enumerate() {
        match pk.get(fact.relation.as_str()) {
            Some(positions) => {
                let key: Vec<String> = positions
                    .iter()
                    .filter_map(|&p| fact.tuple.get(p - 1).cloned())
                    .collect();
                blocks
                    .entry((fact.relation.clone(), key))
                    .or_default()
                    .insert(id);
            }
            None => singletons.push(FactSet::from([id])),
        }
    }
    let mut out: Vec<FactSet> = blocks.into_values().chain(singletons).collect();
    out.sort_by_key(|b| b.iter().next().copied());
    Ok(out)
}
