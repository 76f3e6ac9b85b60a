//! Repair counting and consistent query answering over relational databases.
//!
//! The library models databases as finite sets of facts, constraints as
//! functional dependencies, keys, or denial constraints, and Boolean queries
//! as unions of conjunctive queries with inequality atoms. Repairs are
//! subset-maximal consistent subsets of a database. The main entry points are:
//!
//! * [`hypergraphs`] — minimal conflicts, minimal query solutions, and the
//!   labeled hypergraph combining both.
//! * [`treedec`] — tree decompositions (heuristic and exact-small treewidth).
//! * [`count`] — the dynamic program over a rooted decomposition that counts
//!   repairs falsifying a query, and the derived CQA decision.
//! * [`oracle`] — brute-force repair enumeration used as ground truth.
//! * [`gaifman`] — the fact-pair structure for MSO-based CQA, its Gaifman
//!   graph, and MSO formula emission.
//! * [`generators`] — witness instance families and seeded random instances.

pub mod count;
pub mod gaifman;
pub mod generators;
pub mod graph;
pub mod hypergraphs;
pub mod oracle;
pub mod relational;
pub mod treedec;

use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A relation was used with two different arities.
    #[error("relation `{relation}` used with arity {found}, expected {expected}")]
    ArityMismatch {
        relation: String,
        expected: usize,
        found: usize,
    },
    /// An FD or key refers to a position outside the relation's arity.
    #[error("position {position} out of range for relation `{relation}` of arity {arity}")]
    PositionOutOfRange {
        relation: String,
        position: usize,
        arity: usize,
    },
    /// A constraint set declared two distinct keys for one relation.
    #[error("relation `{relation}` has more than one key; a primary-key set allows at most one")]
    NotAPrimaryKeySet { relation: String },
    /// A variable in an (in)equality atom does not occur in any relational atom.
    #[error("unsafe variable `?{variable}`: it occurs only in (in)equality atoms")]
    UnsafeVariable { variable: String },
    /// A disjunct without relational atoms.
    #[error("a disjunct must contain at least one relational atom")]
    EmptyDisjunct,
    /// An exhaustive computation was asked to run past its size limit.
    #[error("{what}: size {size} exceeds limit {limit}")]
    SizeGuard {
        what: &'static str,
        size: usize,
        limit: usize,
    },
    /// A tree decomposition failed validation against its hypergraph.
    #[error("invalid tree decomposition: {0}")]
    InvalidDecomposition(String),
    /// A bag is too large for the dynamic program (3^|bag| table blow-up).
    #[error("bag of size {size} exceeds the dynamic-programming limit {limit}; pass force to override")]
    BagTooLarge { size: usize, limit: usize },
    /// A precondition on an operation argument was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
