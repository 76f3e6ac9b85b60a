//! Acceptance gate: one test per criterion, each printing a single
//! pass/fail line (run with `--nocapture` to see them on success).

use std::collections::BTreeSet;
use std::time::Instant;

use num_bigint::BigUint;
use repairkit::count::{count_satisfying, number_falsify, CountOptions};
use repairkit::gaifman::{build_structure, emit_mso, gaifman_graph, q_linked, SigmaKind};
use repairkit::generators::{
    gen_bipartite, gen_chain, gen_path, gen_random, ConstraintKind, GenSpec,
};
use repairkit::hypergraphs::{build_solution_conflict, max_independent_set_size, primal_graph};
use repairkit::oracle::{check_mis_correspondence, enumerate_repairs, oracle_counts};
use repairkit::relational::{
    evaluate_query_on, key_blocks, Atom, Constraint, Database, Disjunct, Fact, FactSet, Query,
    Term,
};
use repairkit::treedec::{decompose, exact_treewidth, root_and_order, Heuristic, RootedDecomposition};

fn report(criterion: usize, desc: &str, result: Result<(), String>) {
    match result {
        Ok(()) => println!("criterion {criterion}: PASS - {desc}"),
        Err(e) => {
            println!("criterion {criterion}: FAIL - {desc}: {e}");
            panic!("criterion {criterion} failed: {e}");
        }
    }
}

fn check<T: std::fmt::Debug + PartialEq>(what: &str, got: T, want: T) -> Result<(), String> {
    if got == want {
        Ok(())
    } else {
        Err(format!("{what}: got {got:?}, want {want:?}"))
    }
}

fn big(n: u32) -> BigUint {
    BigUint::from(n)
}

fn grounded(r: &str, tuple: &[&str]) -> Query {
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
fn criterion_1_worked_example_trace() {
    report(1, "worked-example trace on the three-fact database", (|| {
        let db = Database::new(vec![
            Fact::new("R", vec!["a", "b"]),
            Fact::new("R", vec!["c", "b"]),
            Fact::new("R", vec!["c", "d"]),
        ])
        .map_err(|e| e.to_string())?;
        let sigma = vec![Constraint::key("R", [1]), Constraint::key("R", [2])];
        let h = build_solution_conflict(&db, &sigma, &Query::False);
        // bags b = {R(a,b), R(c,b)} and c = {R(c,b), R(c,d)}, rooted at b
        let t = RootedDecomposition::new(
            vec![vec![0, 1], vec![1, 2]],
            BTreeSet::from([(0, 1)]),
            0,
        )
        .map_err(|e| e.to_string())?;
        let run = number_falsify(&h, &t, &CountOptions::default()).map_err(|e| e.to_string())?;

        let b: FactSet = [0, 1].into();
        let b_cap_c: FactSet = [1].into();
        let b_minus_c: FactSet = [0].into();
        let empty = FactSet::new();
        let g = |r: &FactSet, s: &FactSet| run.g_value(0, 1, r, s).map_err(|e| e.to_string());
        let f = |r: &FactSet, s: &FactSet| run.f_value(0, r, s).map_err(|e| e.to_string());

        check("g(∅,∅,b,c)", g(&empty, &empty)?, big(0))?;
        check("g(∅,b∩c,b,c)", g(&empty, &b_cap_c)?, big(1))?;
        check("g(b∩c,b∩c,b,c)", g(&b_cap_c, &b_cap_c)?, big(1))?;
        check("f(b,b,b,(c))", f(&b, &b)?, big(0))?;
        check("f(∅,b,b,(c))", f(&empty, &b)?, big(0))?;
        check("f(b∖c,b,b,(c))", f(&b_minus_c, &b)?, big(1))?;
        check("f(b∩c,b,b,(c))", f(&b_cap_c, &b)?, big(1))?;
        check("output", run.answer().clone(), big(2))
    })());
}

#[test]
fn criterion_2_example_triple() {
    report(2, "five-fact example counts (4, 2, 2) with cqa false", (|| {
        let (db, sigma) = gen_path(5);
        let q = grounded("R", &["a", "b"]);
        let out = count_satisfying(&db, &sigma, &q, Heuristic::MinFill, &CountOptions::default())
            .map_err(|e| e.to_string())?;
        check("total", out.total.clone(), big(4))?;
        check("falsifying", out.falsifying.clone(), big(2))?;
        check("satisfying", out.satisfying.clone(), big(2))?;
        check("cqa", out.cqa(), false)
    })());
}

fn seeded_spec(seed: u64, max_size: usize) -> GenSpec {
    GenSpec {
        size: 1 + (seed as usize * 7 + 3) % max_size,
        block_size: 1 + (seed as usize) % 3,
        kind: match seed % 3 {
            0 => ConstraintKind::PrimaryKey,
            1 => ConstraintKind::Fd,
            _ => ConstraintKind::Dc,
        },
        disjuncts: 1 + (seed as usize / 3) % 2,
        max_atoms: 1 + (seed as usize) % 3,
        with_inequalities: seed % 2 == 1,
        seed,
    }
}

#[test]
fn criterion_3_oracle_equivalence() {
    report(3, "DP equals oracle on 200 seeded instances", (|| {
        let start = Instant::now();
        for seed in 0..200u64 {
            let spec = seeded_spec(seed, 12);
            let (db, sigma, q) = gen_random(&spec);
            let out =
                count_satisfying(&db, &sigma, &q, Heuristic::MinFill, &CountOptions::default())
                    .map_err(|e| format!("seed {seed}: {e}"))?;
            let (total, falsifying, satisfying) =
                oracle_counts(&db, &sigma, &q, 20).map_err(|e| format!("seed {seed}: {e}"))?;
            check(&format!("seed {seed} total"), out.total.clone(), total)?;
            check(&format!("seed {seed} falsifying"), out.falsifying.clone(), falsifying)?;
            check(&format!("seed {seed} satisfying"), out.satisfying.clone(), satisfying)?;
        }
        let elapsed = start.elapsed();
        if elapsed.as_secs() >= 120 {
            return Err(format!("took {elapsed:?}, budget is 2 min"));
        }
        Ok(())
    })());
}

#[test]
fn criterion_4_decomposition_invariance() {
    report(4, "counts invariant under heuristic, root, and child order", (|| {
        for seed in 0..50u64 {
            let spec = seeded_spec(seed, 10);
            let (db, sigma, q) = gen_random(&spec);
            let h = build_solution_conflict(&db, &sigma, &q);
            let reference = {
                let t = decompose(&h, Heuristic::MinFill);
                number_falsify(&h, &t, &CountOptions::default())
                    .map_err(|e| format!("seed {seed}: {e}"))?
                    .answer()
                    .clone()
            };
            let t2 = decompose(&h, Heuristic::MinDegree);
            let mut variants: Vec<RootedDecomposition> = Vec::new();
            let roots: BTreeSet<usize> =
                [0, t2.bag_count() / 2, t2.bag_count() - 1].into_iter().collect();
            for root in roots {
                variants.push(root_and_order(&t2, root).map_err(|e| e.to_string())?);
            }
            let mut reversed = variants.clone();
            for v in &mut reversed {
                v.reverse_child_orders();
            }
            variants.extend(reversed);
            for (i, t) in variants.iter().enumerate() {
                let answer = number_falsify(&h, t, &CountOptions::default())
                    .map_err(|e| format!("seed {seed}: {e}"))?
                    .answer()
                    .clone();
                check(&format!("seed {seed} variant {i}"), answer, reference.clone())?;
            }
        }
        Ok(())
    })());
}

#[test]
fn criterion_5_treewidth_separation() {
    report(5, "hypergraph vs Gaifman treewidths diverge on the two families", (|| {
        for n in 2..=5usize {
            let (db, sigma, q) = gen_bipartite(n);
            let h = build_solution_conflict(&db, &sigma, &q);
            let twh = exact_treewidth(&primal_graph(&h), 12).map_err(|e| e.to_string())?;
            check(&format!("tw_H(I_{n})"), twh, n)?;
            let s = build_structure(&db, &sigma, &q);
            let twg = exact_treewidth(&gaifman_graph(&s), 12).map_err(|e| e.to_string())?;
            check(&format!("tw_G(I_{n})"), twg, 0)?;

            let (db, sigma, q) = gen_chain(n);
            let h = build_solution_conflict(&db, &sigma, &q);
            let twh = exact_treewidth(&primal_graph(&h), 12).map_err(|e| e.to_string())?;
            if twh > 1 {
                return Err(format!("tw_H(I'_{n}) = {twh}, want ≤ 1"));
            }
            let s = build_structure(&db, &sigma, &q);
            let twg = exact_treewidth(&gaifman_graph(&s), 12).map_err(|e| e.to_string())?;
            check(&format!("tw_G(I'_{n})"), twg, n)?;
        }
        Ok(())
    })());
}

#[test]
fn criterion_6_independent_set_correspondence() {
    report(6, "some repair falsifies q iff a block-count independent set exists", (|| {
        for seed in 0..100u64 {
            let spec = GenSpec {
                kind: ConstraintKind::PrimaryKey,
                ..seeded_spec(seed, 12)
            };
            let (db, sigma, q) = gen_random(&spec);
            let repairs =
                enumerate_repairs(&db, &sigma, 20).map_err(|e| format!("seed {seed}: {e}"))?;
            let mut some_falsifies = false;
            for r in &repairs {
                if !evaluate_query_on(&db, r, &q).map_err(|e| e.to_string())? {
                    some_falsifies = true;
                    break;
                }
            }
            let blocks = key_blocks(&db, &sigma).map_err(|e| e.to_string())?.len();
            let h = build_solution_conflict(&db, &sigma, &q);
            let mis = max_independent_set_size(&h, 12).map_err(|e| format!("seed {seed}: {e}"))?;
            check(&format!("seed {seed}"), some_falsifies, mis == blocks)?;
        }
        Ok(())
    })());
}

#[test]
fn criterion_7_mis_correspondence() {
    report(7, "repairs equal maximal independent sets on 100 FD/DC instances", (|| {
        for seed in 0..100u64 {
            let spec = GenSpec {
                kind: if seed % 2 == 0 {
                    ConstraintKind::Fd
                } else {
                    ConstraintKind::Dc
                },
                ..seeded_spec(seed, 10)
            };
            let (db, sigma, _) = gen_random(&spec);
            check_mis_correspondence(&db, &sigma, 20)
                .map_err(|e| format!("seed {seed}: {e}"))?;
        }
        Ok(())
    })());
}

#[test]
fn criterion_8_scaling_sanity() {
    report(8, "10,000-fact path counts in under 10 s within the memo bound", (|| {
        let (db, sigma) = gen_path(10_000);
        let start = Instant::now();
        let out = count_satisfying(
            &db,
            &sigma,
            &Query::False,
            Heuristic::MinFill,
            &CountOptions::default(),
        )
        .map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();
        if elapsed.as_secs() >= 10 {
            return Err(format!("took {elapsed:?}, budget is 10 s"));
        }
        let t = &out.decomposition;
        for b in 0..t.bag_count() {
            let bound = 3usize.pow(t.bag(b).len() as u32);
            if out.run.table_size(b) > bound {
                return Err(format!(
                    "bag {b}: {} memo entries exceed 3^{} = {bound}",
                    out.run.table_size(b),
                    t.bag(b).len()
                ));
            }
        }
        check("width", t.width(), 1)?;
        // sanity on the count itself: the path repair counts follow the
        // tribonacci-style recurrence verified against the oracle up to 15
        for n in 1..=15usize {
            let (db, sigma) = gen_path(n);
            let small = count_satisfying(
                &db,
                &sigma,
                &Query::False,
                Heuristic::MinFill,
                &CountOptions::default(),
            )
            .map_err(|e| e.to_string())?;
            let truth = enumerate_repairs(&db, &sigma, 20).map_err(|e| e.to_string())?;
            check(&format!("path {n}"), small.total.clone(), truth.len().into())?;
        }
        Ok(())
    })());
}

#[test]
fn criterion_9_mso_emission() {
    report(9, "MSO text is database-independent and at most cubic in atoms", (|| {
        // database independence: the emitter sees only the constraint kind
        // and the query; two different instances must yield identical text
        let q = grounded("R", &["a", "b"]);
        let one = emit_mso(SigmaKind::Fd, &q);
        let two = emit_mso(SigmaKind::Fd, &q);
        check("determinism", one.clone(), two)?;

        // chain queries R(x1,x2) ∧ ... ∧ R(xm,xm+1) with all atoms linked
        // through a shared variable maximize the linked-pair count
        let mut lengths = Vec::new();
        for m in 1..=8usize {
            let atoms: Vec<Atom> = (0..m)
                .map(|i| {
                    Atom::new(
                        "R",
                        vec![Term::var("w"), Term::var(format!("x{i}"))],
                    )
                })
                .collect();
            let q = Query::union(vec![Disjunct::new(atoms, vec![])]).map_err(|e| e.to_string())?;
            let d = &q.disjuncts()[0];
            if q_linked(d).len() != m * m {
                return Err(format!("expected all {m}x{m} atom pairs linked"));
            }
            lengths.push(emit_mso(SigmaKind::Fd, &q).len() as f64);
        }
        // log-log slope of the growth must stay at or below cubic
        let xs: Vec<f64> = (1..=8).map(|m| (m as f64).ln()).collect();
        let ys: Vec<f64> = lengths.iter().map(|l| l.ln()).collect();
        let n = xs.len() as f64;
        let (sx, sy) = (xs.iter().sum::<f64>(), ys.iter().sum::<f64>());
        let sxy: f64 = xs.iter().zip(&ys).map(|(a, b)| a * b).sum();
        let sxx: f64 = xs.iter().map(|a| a * a).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        if slope > 3.0 {
            return Err(format!("growth exponent {slope:.2} exceeds 3"));
        }
        // and explicitly: a cubic with integer exponent bounds every length
        let c = lengths[0];
        for (i, len) in lengths.iter().enumerate() {
            let m = (i + 1) as f64;
            if *len > c * m * m * m {
                return Err(format!("length {len} at {m} atoms breaks the cubic bound"));
            }
        }
        Ok(())
    })());
}
