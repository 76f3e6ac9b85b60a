//! JSON report schema. Repair counts are decimal strings so consumers never
//! overflow a 64-bit integer.

use num_bigint::BigUint;
use repairkit::count::{CountOutcome, Timings};
use repairkit::hypergraphs::LabeledHypergraph;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct GraphStats {
    pub nodes: usize,
    pub conflict_edges: usize,
    pub solution_edges: usize,
}

impl GraphStats {
    pub fn of(h: &LabeledHypergraph) -> GraphStats {
        GraphStats {
            nodes: h.node_count(),
            conflict_edges: h.conflict_edge_count(),
            solution_edges: h.solution_edge_count(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct TimingsMs {
    pub parse: u128,
    pub hypergraph: u128,
    pub decompose: u128,
    pub count: u128,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Report {
    pub repairs_total: String,
    pub repairs_falsifying: String,
    pub repairs_satisfying: String,
    pub cqa: bool,
    pub width_used: usize,
    pub bags: usize,
    pub graph: GraphStats,
    pub timings_ms: TimingsMs,
}

impl Report {
    pub fn of(outcome: &CountOutcome, parse_ms: u128) -> Report {
        let Timings {
            hypergraph_ms,
            decompose_ms,
            count_ms,
        } = outcome.timings;
        Report {
            repairs_total: outcome.total.to_string(),
            repairs_falsifying: outcome.falsifying.to_string(),
            repairs_satisfying: outcome.satisfying.to_string(),
            cqa: outcome.cqa(),
            width_used: outcome.width_used(),
            bags: outcome.bag_count(),
            graph: GraphStats::of(&outcome.hypergraph),
            timings_ms: TimingsMs {
                parse: parse_ms,
                hypergraph: hypergraph_ms,
                decompose: decompose_ms,
                count: count_ms,
            },
        }
    }

    pub fn total(&self) -> Option<BigUint> {
        self.repairs_total.parse().ok()
    }
}

pub fn emit_report(report: &Report) -> String {
    let mut out = serde_json::to_string_pretty(report).expect("report serializes");
    out.push('\n');
    out
}
