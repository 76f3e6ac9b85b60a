//! Command-line front end: repair counting, CQA decisions, graph exports,
//! decompositions, the Gaifman-structure tools, the brute-force oracle, and
//! instance generation.
//!
//! Exit codes: 0 success (and `cqa` true), 1 `cqa` false, 2 parse or schema
//! errors, 3 size-guard refusals.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use repairkit::count::{count_satisfying, CountOptions, CountOutcome};
use repairkit::gaifman::{build_structure, emit_mso, gaifman_graph, tw_measures, SigmaKind};
use repairkit::generators::{gen_bipartite, gen_chain, gen_path, gen_random, ConstraintKind, GenSpec};
use repairkit::hypergraphs::{build_solution_conflict, primal_graph};
use repairkit::oracle::oracle_counts;
use repairkit::relational::{Constraint, Database, FactSet, Query};
use repairkit::treedec::{decompose, exact_treewidth, Heuristic};

use repairkit_cli::report::{emit_report, GraphStats, Report};
use repairkit_cli::textio;

#[derive(Parser)]
#[command(
    name = "repairkit",
    about = "Count database repairs and decide consistent query answers",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum HeuristicArg {
    MinFill,
    MinDegree,
}

impl From<HeuristicArg> for Heuristic {
    fn from(h: HeuristicArg) -> Heuristic {
        match h {
            HeuristicArg::MinFill => Heuristic::MinFill,
            HeuristicArg::MinDegree => Heuristic::MinDegree,
        }
    }
}

#[derive(Args)]
struct InstanceArgs {
    /// Facts file (.facts): one `R(c1,c2,...)` per line
    #[arg(long)]
    db: PathBuf,
    /// Constraints file (.cst): `key`/`fd`/`dc` lines
    #[arg(long)]
    constraints: PathBuf,
    /// Query file (.q): one disjunct per line, or `false`; omitted means the
    /// identically-false query
    #[arg(long)]
    query: Option<PathBuf>,
}

#[derive(Args)]
struct CountArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Emit the JSON report instead of the human-readable summary
    #[arg(long)]
    json: bool,
    /// Print every stored dynamic-programming table entry
    #[arg(long)]
    trace: bool,
    #[arg(long, value_enum, default_value = "min-fill")]
    heuristic: HeuristicArg,
    /// Run even when a bag exceeds the dynamic-programming size limit
    #[arg(long)]
    force: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Count the repairs and how they split on the query
    Count(CountArgs),
    /// Decide whether the query holds in every repair (exit 0 yes, 1 no)
    Cqa(CountArgs),
    /// Solution-conflict hypergraph statistics and DOT export
    Graph {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        json: bool,
        /// Print the primal graph in GraphViz DOT form
        #[arg(long)]
        dot: bool,
    },
    /// Tree decomposition and treewidth of the solution-conflict hypergraph
    Tw {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, value_enum, default_value = "min-fill")]
        heuristic: HeuristicArg,
        /// Largest connected component the exact treewidth solver accepts
        #[arg(long, default_value_t = 12)]
        exact_max: usize,
    },
    /// Fact-pair structure: statistics, MSO formula, treewidth comparison
    Gaifman {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Print the MSO formula for the instance's constraint kind and query
        #[arg(long)]
        emit_mso: bool,
        /// Print structure statistics
        #[arg(long)]
        stats: bool,
        /// Print both treewidth measures (hypergraph vs Gaifman graph)
        #[arg(long)]
        compare_tw: bool,
    },
    /// Brute-force repair counts (ground truth on small databases)
    Oracle {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Largest database size the oracle accepts
        #[arg(long, default_value_t = 20)]
        limit: usize,
    },
    /// Write a generated instance as .facts/.cst/.q files
    Gen {
        #[command(subcommand)]
        family: GenFamily,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Pk,
    Fd,
    Dc,
}

#[derive(Subcommand)]
enum GenFamily {
    /// n unary R-facts and n unary S-facts, q = ∃x∃y (R(x) ∧ S(y))
    Bipartite {
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// R(i,*), S(*,i), T(negi) with the never-matching three-atom chain query
    Chain {
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// n facts whose conflict graph is a path, under both keys of R
    Path {
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Seeded random instance
    Random {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8)]
        size: usize,
        #[arg(long, default_value_t = 2)]
        block_size: usize,
        #[arg(long, value_enum, default_value = "pk")]
        kind: KindArg,
        #[arg(long, default_value_t = 1)]
        disjuncts: usize,
        #[arg(long, default_value_t = 2)]
        max_atoms: usize,
        /// Allow inequality atoms in the generated query
        #[arg(long)]
        inequalities: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// A failure carrying its process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn parse(message: impl Into<String>) -> Failure {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<textio::ParseError> for Failure {
    fn from(e: textio::ParseError) -> Failure {
        Failure::parse(e.to_string())
    }
}

impl From<repairkit::Error> for Failure {
    fn from(e: repairkit::Error) -> Failure {
        let code = match e {
            repairkit::Error::SizeGuard { .. } | repairkit::Error::BagTooLarge { .. } => 3,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::parse(format!("{}: {e}", path.display())))
}

struct Instance {
    db: Database,
    sigma: Vec<Constraint>,
    query: Query,
    parse_ms: u128,
}

fn load_instance(args: &InstanceArgs) -> Result<Instance, Failure> {
    let start = Instant::now();
    let (db, warnings) =
        textio::parse_database(&read_file(&args.db)?, &args.db.display().to_string())?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    let sigma = textio::parse_constraints(
        &read_file(&args.constraints)?,
        &args.constraints.display().to_string(),
    )?;
    let query = match &args.query {
        Some(path) => textio::parse_query(&read_file(path)?, &path.display().to_string())?,
        None => Query::False,
    };
    repairkit::relational::validate_constraints(&db, &sigma)?;
    Ok(Instance {
        db,
        sigma,
        query,
        parse_ms: start.elapsed().as_millis(),
    })
}

fn fmt_set(db: &Database, set: &FactSet) -> String {
    let items: Vec<String> = set.iter().map(|&i| db.fact(i).to_string()).collect();
    format!("{{{}}}", items.join(", "))
}

fn print_trace(db: &Database, outcome: &CountOutcome) {
    let t = &outcome.decomposition;
    for b in 0..t.bag_count() {
        let bag: FactSet = t.bag(b).iter().copied().collect();
        println!("bag {b} {}", fmt_set(db, &bag));
        for (r, s, v) in outcome.run.f_entries(b) {
            println!("  f r={} s={} -> {v}", fmt_set(db, &r), fmt_set(db, &s));
        }
        for &c in t.children(b) {
            println!("  edge to child bag {c}");
            for (r, s, v) in outcome.run.g_entries(b, c) {
                println!("    g r={} s={} -> {v}", fmt_set(db, &r), fmt_set(db, &s));
            }
        }
    }
}

fn run_count(args: &CountArgs) -> Result<CountOutcome, Failure> {
    let instance = load_instance(&args.instance)?;
    let opts = CountOptions {
        force: args.force,
        ..CountOptions::default()
    };
    let outcome = count_satisfying(
        &instance.db,
        &instance.sigma,
        &instance.query,
        args.heuristic.into(),
        &opts,
    )?;
    if args.trace {
        print_trace(&instance.db, &outcome);
    }
    if args.json {
        print!("{}", emit_report(&Report::of(&outcome, instance.parse_ms)));
    } else {
        let report = Report::of(&outcome, instance.parse_ms);
        println!("repairs_total: {}", report.repairs_total);
        println!("repairs_falsifying: {}", report.repairs_falsifying);
        println!("repairs_satisfying: {}", report.repairs_satisfying);
        println!("cqa: {}", report.cqa);
        println!("width_used: {}", report.width_used);
        println!("bags: {}", report.bags);
    }
    Ok(outcome)
}

fn write_instance(
    out: &Path,
    db: &Database,
    sigma: &[Constraint],
    q: &Query,
) -> Result<(), Failure> {
    let write = |ext: &str, text: String| -> Result<(), Failure> {
        let path = out.with_extension(ext);
        fs::write(&path, text)
            .map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?;
        println!("wrote {}", path.display());
        Ok(())
    };
    write("facts", textio::serialize_database(db))?;
    write("cst", textio::serialize_constraints(sigma))?;
    write("q", textio::serialize_query(q))?;
    Ok(())
}

fn thread_cap() -> usize {
    match std::env::var("REPAIRKIT_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) | Err(_) => 1, // 0 = auto; the engine is single-threaded
            Ok(n) => n.min(1),
        },
        Err(_) => 1,
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let _threads = thread_cap();
    match cli.cmd {
        Cmd::Count(args) => {
            run_count(&args)?;
            Ok(0)
        }
        Cmd::Cqa(args) => {
            let outcome = run_count(&args)?;
            Ok(u8::from(!outcome.cqa()))
        }
        Cmd::Graph { instance, json, dot } => {
            let inst = load_instance(&instance)?;
            let h = build_solution_conflict(&inst.db, &inst.sigma, &inst.query);
            let stats = GraphStats::of(&h);
            if json {
                println!("{}", serde_json::to_string_pretty(&stats).expect("serializes"));
            } else {
                println!("nodes: {}", stats.nodes);
                println!("conflict_edges: {}", stats.conflict_edges);
                println!("solution_edges: {}", stats.solution_edges);
            }
            if dot {
                let g = primal_graph(&h);
                print!("{}", g.to_dot(|v| inst.db.fact(v).to_string()));
            }
            Ok(0)
        }
        Cmd::Tw {
            instance,
            heuristic,
            exact_max,
        } => {
            let inst = load_instance(&instance)?;
            let h = build_solution_conflict(&inst.db, &inst.sigma, &inst.query);
            let t = decompose(&h, heuristic.into());
            println!("width: {}", t.width());
            println!("bags: {}", t.bag_count());
            match exact_treewidth(&primal_graph(&h), exact_max) {
                Ok(w) => println!("exact_treewidth: {w}"),
                Err(e) => println!("exact_treewidth: unavailable ({e})"),
            }
            for b in 0..t.bag_count() {
                let bag: FactSet = t.bag(b).iter().copied().collect();
                println!("bag {b}: {}", fmt_set(&inst.db, &bag));
            }
            for &(a, b) in t.tree_edges() {
                println!("edge {a} {b}");
            }
            Ok(0)
        }
        Cmd::Gaifman {
            instance,
            emit_mso: do_emit,
            stats,
            compare_tw,
        } => {
            let inst = load_instance(&instance)?;
            let kind = SigmaKind::of_constraints(&inst.sigma);
            if do_emit {
                print!("{}", emit_mso(kind, &inst.query));
            }
            if stats || (!do_emit && !compare_tw) {
                let s = build_structure(&inst.db, &inst.sigma, &inst.query);
                let g = gaifman_graph(&s);
                println!("domain: {}", s.node_count());
                println!("depfails_arity: {}", kind.depfails_arity());
                println!("minimal_conflicts: {}", s.conflicts.len());
                let pairs: usize = s.linked.values().map(|p| p.len()).sum();
                println!("linked_relations: {}", s.linked.len());
                println!("linked_pairs: {pairs}");
                println!("gaifman_edges: {}", g.edge_count());
            }
            if compare_tw {
                let m = tw_measures(&inst.db, &inst.sigma, &inst.query)?;
                println!("twh_upper: {}", m.twh_upper);
                match m.twh_exact {
                    Some(w) => println!("twh_exact: {w}"),
                    None => println!("twh_exact: unavailable"),
                }
                println!("twg_upper: {}", m.twg_upper);
                match m.twg_exact {
                    Some(w) => println!("twg_exact: {w}"),
                    None => println!("twg_exact: unavailable"),
                }
            }
            Ok(0)
        }
        Cmd::Oracle { instance, limit } => {
            let inst = load_instance(&instance)?;
            let (total, falsifying, satisfying) =
                oracle_counts(&inst.db, &inst.sigma, &inst.query, limit)?;
            println!("repairs_total: {total}");
            println!("repairs_falsifying: {falsifying}");
            println!("repairs_satisfying: {satisfying}");
            Ok(0)
        }
        Cmd::Gen { family } => {
            match family {
                GenFamily::Bipartite { n, out } => {
                    let (db, sigma, q) = gen_bipartite(n);
                    write_instance(&out, &db, &sigma, &q)?;
                }
                GenFamily::Chain { n, out } => {
                    let (db, sigma, q) = gen_chain(n);
                    write_instance(&out, &db, &sigma, &q)?;
                }
                GenFamily::Path { n, out } => {
                    let (db, sigma) = gen_path(n);
                    write_instance(&out, &db, &sigma, &Query::False)?;
                }
                GenFamily::Random {
                    out,
                    size,
                    block_size,
                    kind,
                    disjuncts,
                    max_atoms,
                    inequalities,
                    seed,
                } => {
                    let spec = GenSpec {
                        size,
                        block_size,
                        kind: match kind {
                            KindArg::Pk => ConstraintKind::PrimaryKey,
                            KindArg::Fd => ConstraintKind::Fd,
                            KindArg::Dc => ConstraintKind::Dc,
                        },
                        disjuncts,
                        max_atoms,
                        with_inequalities: inequalities,
                        seed,
                    };
                    let (db, sigma, q) = gen_random(&spec);
                    write_instance(&out, &db, &sigma, &q)?;
                }
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    // die quietly when a downstream pipe (e.g. `| head`) closes stdout
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
