//! Instance families used as witnesses and seeded random instances for
//! cross-checking the dynamic program against the brute-force oracle.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::relational::{Atom, Constraint, Database, DcAtom, Disjunct, Fact, Query, Term};

fn constant(i: usize) -> String {
    if i < 26 {
        char::from(b'a' + i as u8).to_string()
    } else {
        format!("c{i}")
    }
}

/// `n` unary R-facts and `n` unary S-facts with `q = ∃x∃y (R(x) ∧ S(y))`,
/// no constraints. The minimal solutions form a complete bipartite graph
/// between the two relations, while the Gaifman structure stays edgeless.
pub fn gen_bipartite(n: usize) -> (Database, Vec<Constraint>, Query) {
    assert!(n >= 1);
    let mut facts = Vec::new();
    for i in 1..=n {
        facts.push(Fact::new("R", vec![i.to_string()]));
        facts.push(Fact::new("S", vec![i.to_string()]));
    }
    let db = Database::new(facts).expect("family facts are well-formed");
    let q = Query::union(vec![Disjunct::new(
        vec![
            Atom::new("R", vec![Term::var("x")]),
            Atom::new("S", vec![Term::var("y")]),
        ],
        vec![],
    )])
    .expect("family query is safe");
    (db, vec![], q)
}

/// The broken-chain family: `R(i,*)`, `S(*,i)`, `T(negi)` for `i ≤ n` with
/// `q = ∃x∃y∃z (R(x,y) ∧ S(y,z) ∧ T(z))`, no constraints. The query never
/// matches (S's second components are the plain numbers, T holds the `neg`
/// constants), so the hypergraph is edgeless — but the shared query
/// variables make every R-fact q-consistent with every S-fact, giving the
/// Gaifman graph a `K_{n,n}`.
pub fn gen_chain(n: usize) -> (Database, Vec<Constraint>, Query) {
    assert!(n >= 1);
    let mut facts = Vec::new();
    for i in 1..=n {
        facts.push(Fact::new("R", vec![i.to_string(), "*".to_string()]));
        facts.push(Fact::new("S", vec!["*".to_string(), i.to_string()]));
        facts.push(Fact::new("T", vec![format!("neg{i}")]));
    }
    let db = Database::new(facts).expect("family facts are well-formed");
    let q = Query::union(vec![Disjunct::new(
        vec![
            Atom::new("R", vec![Term::var("x"), Term::var("y")]),
            Atom::new("S", vec![Term::var("y"), Term::var("z")]),
            Atom::new("T", vec![Term::var("z")]),
        ],
        vec![],
    )])
    .expect("family query is safe");
    (db, vec![], q)
}

/// `n` binary R-facts alternating shared first and second components, under
/// both keys of R: the conflict graph is a path with `n − 1` edges. With
/// `n = 5` this is exactly the five-fact running example.
pub fn gen_path(n: usize) -> (Database, Vec<Constraint>) {
    assert!(n >= 1);
    let facts: Vec<Fact> = (0..n)
        .map(|i| Fact::new("R", vec![constant((i + 1) / 2 * 2), constant(i / 2 * 2 + 1)]))
        .collect();
    let db = Database::new(facts).expect("family facts are well-formed");
    let sigma = vec![Constraint::key("R", [1]), Constraint::key("R", [2])];
    (db, sigma)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    /// One primary key per relation; conflicts are key-equal blocks.
    PrimaryKey,
    /// Functional dependencies.
    Fd,
    /// Denial constraints with up to 3 relational atoms.
    Dc,
}

/// Shape of a seeded random instance.
#[derive(Clone, Debug)]
pub struct GenSpec {
    /// Number of facts.
    pub size: usize,
    /// Facts per key-equal block in the primary-key case.
    pub block_size: usize,
    pub kind: ConstraintKind,
    /// Disjuncts in the query.
    pub disjuncts: usize,
    /// Cap on relational atoms per disjunct.
    pub max_atoms: usize,
    /// Allow inequality atoms in the query.
    pub with_inequalities: bool,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> GenSpec {
        GenSpec {
            size: 8,
            block_size: 2,
            kind: ConstraintKind::PrimaryKey,
            disjuncts: 1,
            max_atoms: 2,
            with_inequalities: false,
            seed: 0,
        }
    }
}

fn random_query(spec: &GenSpec, db: &Database, rng: &mut ChaCha8Rng) -> Query {
    let relations: Vec<(String, usize)> = db
        .facts()
        .iter()
        .map(|f| (f.relation.clone(), f.arity()))
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let adom: Vec<String> = db.adom().into_iter().map(str::to_string).collect();
    let var_pool = ["x", "y", "z", "u", "v"];
    let mut disjuncts = Vec::new();
    for _ in 0..spec.disjuncts.max(1) {
        let atom_count = rng.gen_range(1..=spec.max_atoms.max(1));
        let mut atoms = Vec::new();
        let mut used_vars: Vec<&str> = Vec::new();
        for _ in 0..atom_count {
            let (rel, arity) = relations
                .choose(rng)
                .cloned()
                .unwrap_or_else(|| ("R".to_string(), 2));
            let terms = (0..arity)
                .map(|_| {
                    if adom.is_empty() || rng.gen_bool(0.7) {
                        let v = var_pool[rng.gen_range(0..var_pool.len())];
                        if !used_vars.contains(&v) {
                            used_vars.push(v);
                        }
                        Term::var(v)
                    } else {
                        Term::constant(adom.choose(rng).unwrap().clone())
                    }
                })
                .collect();
            atoms.push(Atom::new(rel, terms));
        }
        let mut inequalities = Vec::new();
        if spec.with_inequalities && !used_vars.is_empty() && rng.gen_bool(0.6) {
            let x = *used_vars.choose(rng).unwrap();
            let other = if used_vars.len() > 1 && rng.gen_bool(0.7) {
                let y = loop {
                    let y = *used_vars.choose(rng).unwrap();
                    if y != x {
                        break y;
                    }
                };
                Term::var(y)
            } else if adom.is_empty() {
                Term::constant("c0")
            } else {
                Term::constant(adom.choose(rng).unwrap().clone())
            };
            inequalities.push((Term::var(x), other));
        }
        disjuncts.push(Disjunct::new(atoms, inequalities));
    }
    Query::union(disjuncts).expect("generated disjuncts are safe")
}

fn dc_templates(rng: &mut ChaCha8Rng, has_s: bool) -> Vec<Constraint> {
    let v = |n: &str| Term::var(n);
    let mut pool = vec![
        // no composable R-pairs
        Constraint::dc(vec![
            DcAtom::Rel(Atom::new("R", vec![v("x"), v("y")])),
            DcAtom::Rel(Atom::new("R", vec![v("y"), v("z")])),
        ])
        .unwrap(),
        // the first position is a key, phrased as a DC
        Constraint::dc(vec![
            DcAtom::Rel(Atom::new("R", vec![v("x"), v("y")])),
            DcAtom::Rel(Atom::new("R", vec![v("x"), v("z")])),
            DcAtom::Neq(v("y"), v("z")),
        ])
        .unwrap(),
        // no loops: single-fact conflicts
        Constraint::dc(vec![DcAtom::Rel(Atom::new("R", vec![v("x"), v("x")]))]).unwrap(),
    ];
    if has_s {
        pool.push(
            Constraint::dc(vec![
                DcAtom::Rel(Atom::new("R", vec![v("x"), v("y")])),
                DcAtom::Rel(Atom::new("S", vec![v("x"), v("y")])),
            ])
            .unwrap(),
        );
    }
    let count = rng.gen_range(1..=2);
    pool.shuffle(rng);
    pool.truncate(count);
    pool
}

/// A deterministic-per-seed random instance of the requested shape.
pub fn gen_random(spec: &GenSpec) -> (Database, Vec<Constraint>, Query) {
    assert!(spec.size >= 1 && spec.block_size >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (facts, sigma) = match spec.kind {
        ConstraintKind::PrimaryKey => {
            let mut facts = Vec::new();
            let mut block = 0;
            while facts.len() < spec.size {
                for j in 0..spec.block_size {
                    if facts.len() == spec.size {
                        break;
                    }
                    facts.push(Fact::new(
                        "R",
                        vec![format!("k{block}"), format!("v{}_{j}", rng.gen_range(0..3))],
                    ));
                }
                block += 1;
            }
            (facts, vec![Constraint::key("R", [1])])
        }
        ConstraintKind::Fd => {
            let mut facts = Vec::new();
            while facts.len() < spec.size {
                let f = Fact::new(
                    "R",
                    vec![
                        format!("a{}", rng.gen_range(0..4)),
                        format!("b{}", rng.gen_range(0..4)),
                    ],
                );
                if !facts.contains(&f) {
                    facts.push(f);
                }
            }
            let mut sigma = vec![Constraint::fd("R", [1], [2])];
            if rng.gen_bool(0.5) {
                sigma.push(Constraint::fd("R", [2], [1]));
            }
            (facts, sigma)
        }
        ConstraintKind::Dc => {
            let with_s = spec.size >= 4;
            let mut facts = Vec::new();
            while facts.len() < spec.size {
                let rel = if with_s && rng.gen_bool(0.3) { "S" } else { "R" };
                let f = Fact::new(
                    rel,
                    vec![
                        format!("a{}", rng.gen_range(0..3)),
                        format!("a{}", rng.gen_range(0..3)),
                    ],
                );
                if !facts.contains(&f) {
                    facts.push(f);
                }
            }
            let has_s = facts.iter().any(|f| f.relation == "S");
            (facts, dc_templates(&mut rng, has_s))
        }
    };
    let db = Database::new(facts).expect("generated facts are well-formed");
    let q = random_query(spec, &db, &mut rng);
    (db, sigma, q)
}
