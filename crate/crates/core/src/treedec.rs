//! Tree decompositions: heuristic construction by elimination orderings,
//! validation, rooting, and exact treewidth on small graphs.

use std::collections::{BTreeMap, BTreeSet};

use crate::graph::SimpleGraph;
use crate::hypergraphs::LabeledHypergraph;
use crate::relational::FactId;
use crate::{Error, Result};

/// Vertex-selection rule for the elimination ordering.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Heuristic {
    /// Eliminate the vertex introducing the fewest fill-in edges.
    #[default]
    MinFill,
    /// Eliminate the vertex of smallest degree.
    MinDegree,
}

/// A tree decomposition with a chosen root and a fixed child order per bag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedDecomposition {
    bags: Vec<Vec<FactId>>,
    edges: BTreeSet<(usize, usize)>,
    root: usize,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
}

impl RootedDecomposition {
    /// Builds a rooted decomposition from bags and tree edges, checking
    /// tree-ness. Child order is canonical: children sort by bag content,
    /// then index.
    pub fn new(
        bags: Vec<Vec<FactId>>,
        edges: BTreeSet<(usize, usize)>,
        root: usize,
    ) -> Result<RootedDecomposition> {
        let n = bags.len();
        if n == 0 {
            return Err(Error::InvalidDecomposition("no bags".into()));
        }
        if root >= n {
            return Err(Error::InvalidDecomposition(format!(
                "root index {root} out of range"
            )));
        }
        if edges.len() + 1 != n {
            return Err(Error::InvalidDecomposition(format!(
                "{} edges over {} bags is not a tree",
                edges.len(),
                n
            )));
        }
        for &(u, v) in &edges {
            if u >= n || v >= n || u == v {
                return Err(Error::InvalidDecomposition(format!(
                    "bad tree edge ({u},{v})"
                )));
            }
        }
        let mut bags = bags;
        for bag in &mut bags {
            bag.sort_unstable();
            bag.dedup();
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        let mut parent = vec![None; n];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut seen = vec![false; n];
        let mut stack = vec![root];
        seen[root] = true;
        let mut visited = 0;
        while let Some(b) = stack.pop() {
            visited += 1;
            let mut kids: Vec<usize> = adjacency[b]
                .iter()
                .copied()
                .filter(|&c| !seen[c])
                .collect();
            kids.sort_by(|&a, &b2| bags[a].cmp(&bags[b2]).then(a.cmp(&b2)));
            for &c in &kids {
                seen[c] = true;
                parent[c] = Some(b);
                stack.push(c);
            }
            children[b] = kids;
        }
        if visited != n {
            return Err(Error::InvalidDecomposition(
                "tree edges do not connect all bags".into(),
            ));
        }
        Ok(RootedDecomposition {
            bags,
            edges,
            root,
            parent,
            children,
        })
    }

    pub fn bag_count(&self) -> usize {
        self.bags.len()
    }

    pub fn bag(&self, i: usize) -> &[FactId] {
        &self.bags[i]
    }

    pub fn bags(&self) -> &[Vec<FactId>] {
        &self.bags
    }

    pub fn tree_edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, bag: usize) -> Option<usize> {
        self.parent[bag]
    }

    pub fn children(&self, bag: usize) -> &[usize] {
        &self.children[bag]
    }

    /// Largest bag size minus one.
    pub fn width(&self) -> usize {
        self.bags
            .iter()
            .map(Vec::len)
            .max()
            .unwrap_or(0)
            .saturating_sub(1)
    }

    pub fn max_bag_size(&self) -> usize {
        self.bags.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Reverses every bag's child sequence. The counting result must not
    /// depend on child order; tests rely on this knob.
    pub fn reverse_child_orders(&mut self) {
        for kids in &mut self.children {
            kids.reverse();
        }
    }
}

/// Re-roots a decomposition at the given bag, recomputing parents and the
/// canonical child order.
pub fn root_and_order(t: &RootedDecomposition, root: usize) -> Result<RootedDecomposition> {
    RootedDecomposition::new(t.bags().to_vec(), t.tree_edges().clone(), root)
}

/// True iff `t` is a tree decomposition of `h`: bags cover all nodes, every
/// hyperedge fits in some bag, and each node's bags induce a connected
/// subtree.
pub fn validate(t: &RootedDecomposition, h: &LabeledHypergraph) -> bool {
    validate_detailed(t, h).is_ok()
}

pub fn validate_detailed(t: &RootedDecomposition, h: &LabeledHypergraph) -> Result<()> {
    let n = h.node_count();
    let mut bags_of: BTreeMap<FactId, Vec<usize>> = BTreeMap::new();
    for (i, bag) in t.bags().iter().enumerate() {
        for &v in bag {
            if v >= n {
                return Err(Error::InvalidDecomposition(format!(
                    "bag {i} mentions unknown node {v}"
                )));
            }
            bags_of.entry(v).or_default().push(i);
        }
    }
    for v in 0..n {
        if !bags_of.contains_key(&v) {
            return Err(Error::InvalidDecomposition(format!(
                "node {v} is covered by no bag"
            )));
        }
    }
    for edge in h.edges() {
        let first = *edge.facts.iter().next().expect("hyperedges are nonempty");
        let covered = bags_of[&first]
            .iter()
            .any(|&b| edge.facts.iter().all(|v| t.bag(b).binary_search(v).is_ok()));
        if !covered {
            return Err(Error::InvalidDecomposition(format!(
                "hyperedge {:?} fits in no bag",
                edge.facts
            )));
        }
    }
    // connectivity: the bags containing each node induce a connected subtree
    let mut adjacency: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(a, b) in t.tree_edges() {
        adjacency.entry(a).or_default().push(b);
        adjacency.entry(b).or_default().push(a);
    }
    for (v, bags) in &bags_of {
        let members: BTreeSet<usize> = bags.iter().copied().collect();
        let mut seen = BTreeSet::from([bags[0]]);
        let mut stack = vec![bags[0]];
        while let Some(b) = stack.pop() {
            if let Some(nbrs) = adjacency.get(&b) {
                for &c in nbrs {
                    if members.contains(&c) && seen.insert(c) {
                        stack.push(c);
                    }
                }
            }
        }
        if seen.len() != members.len() {
            return Err(Error::InvalidDecomposition(format!(
                "bags containing node {v} are not connected"
            )));
        }
    }
    Ok(())
}

fn fill_count(adj: &[BTreeSet<usize>], v: usize) -> usize {
    let nbrs: Vec<usize> = adj[v].iter().copied().collect();
    let mut missing = 0;
    for (i, &a) in nbrs.iter().enumerate() {
        for &b in &nbrs[i + 1..] {
            if !adj[a].contains(&b) {
                missing += 1;
            }
        }
    }
    missing
}

fn elimination_bags(g: &SimpleGraph, heuristic: Heuristic) -> (Vec<usize>, Vec<Vec<usize>>) {
    let n = g.node_count();
    let mut adj: Vec<BTreeSet<usize>> = (0..n).map(|v| g.neighbors(v).clone()).collect();
    let score = |adj: &[BTreeSet<usize>], v: usize| match heuristic {
        Heuristic::MinDegree => adj[v].len(),
        Heuristic::MinFill => fill_count(adj, v),
    };
    let mut scores: Vec<usize> = (0..n).map(|v| score(&adj, v)).collect();
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|v| (scores[v], v)).collect();
    let mut order = Vec::with_capacity(n);
    let mut bags = Vec::with_capacity(n);
    while let Some(&(_, v)) = queue.iter().next() {
        queue.remove(&(scores[v], v));
        let nbrs: Vec<usize> = adj[v].iter().copied().collect();
        let mut bag = nbrs.clone();
        bag.push(v);
        bag.sort_unstable();
        order.push(v);
        bags.push(bag);
        // connect the eliminated vertex's neighborhood into a clique
        let mut dirty: BTreeSet<usize> = nbrs.iter().copied().collect();
        for (i, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[i + 1..] {
                if adj[a].insert(b) {
                    adj[b].insert(a);
                }
            }
        }
        for &u in &nbrs {
            adj[u].remove(&v);
        }
        if heuristic == Heuristic::MinFill {
            // fill counts can also change two steps away from v
            for &u in &nbrs {
                dirty.extend(adj[u].iter().copied());
            }
        }
        for u in dirty {
            if u == v || !queue.remove(&(scores[u], u)) {
                continue;
            }
            scores[u] = score(&adj, u);
            queue.insert((scores[u], u));
        }
        adj[v].clear();
    }
    (order, bags)
}

/// Computes a valid rooted tree decomposition of the hypergraph's primal
/// graph via the chosen elimination heuristic. Deterministic: heuristic ties
/// break on the canonical fact order.
pub fn decompose(h: &LabeledHypergraph, heuristic: Heuristic) -> RootedDecomposition {
    decompose_graph(&crate::hypergraphs::primal_graph(h), heuristic)
}

/// [`decompose`] for a plain graph.
pub fn decompose_graph(g: &SimpleGraph, heuristic: Heuristic) -> RootedDecomposition {
    let n = g.node_count();
    if n == 0 {
        return RootedDecomposition::new(vec![vec![]], BTreeSet::new(), 0)
            .expect("single empty bag is a tree");
    }
    let (order, bags) = elimination_bags(&g, heuristic);
    let mut position = vec![0usize; n];
    for (step, &v) in order.iter().enumerate() {
        position[v] = step;
    }
    // bag of the last-eliminated vertex doubles as the default root and the
    // attachment point for isolated nodes
    let root = n - 1;
    let mut edges = BTreeSet::new();
    for (step, &v) in order.iter().enumerate() {
        if step == root {
            continue;
        }
        let later = bags[step]
            .iter()
            .filter(|&&u| u != v)
            .min_by_key(|&&u| position[u]);
        let target = match later {
            Some(&u) => position[u],
            None => root,
        };
        edges.insert((step.min(target), step.max(target)));
    }
    RootedDecomposition::new(bags, edges, root).expect("elimination produces a tree")
}

fn reachable_degree(adj: &[u32], eliminated: u32, v: usize) -> u32 {
    let mut visited = 1u32 << v;
    let mut frontier = 1u32 << v;
    let mut outside = 0u32;
    while frontier != 0 {
        let mut reach = 0u32;
        let mut rest = frontier;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            reach |= adj[i];
        }
        reach &= !visited;
        visited |= reach;
        outside |= reach & !eliminated;
        frontier = reach & eliminated;
    }
    outside.count_ones()
}

/// Exact treewidth by dynamic programming over elimination-order prefixes,
/// computed per connected component. Components larger than `max_component`
/// vertices are refused.
pub fn exact_treewidth(g: &SimpleGraph, max_component: usize) -> Result<usize> {
    let mut best = 0usize;
    for component in g.components() {
        let m = component.len();
        if m <= 1 {
            continue;
        }
        if m > max_component || m > 25 {
            return Err(Error::SizeGuard {
                what: "exact treewidth",
                size: m,
                limit: max_component.min(25),
            });
        }
        let index: BTreeMap<usize, usize> = component
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, i))
            .collect();
        let adj: Vec<u32> = component
            .iter()
            .map(|&v| {
                g.neighbors(v)
                    .iter()
                    .fold(0u32, |mask, u| mask | (1 << index[u]))
            })
            .collect();
        let full = (1u32 << m) - 1;
        let mut table = vec![u8::MAX; (full as usize) + 1];
        table[0] = 0;
        for set in 1..=full {
            let mut value = u8::MAX;
            let mut rest = set;
            while rest != 0 {
                let v = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let without = set & !(1 << v);
                let degree = reachable_degree(&adj, without, v) as u8;
                value = value.min(table[without as usize].max(degree));
            }
            table[set as usize] = value;
        }
        best = best.max(table[full as usize] as usize);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraphs::{build_solution_conflict, primal_graph, Hyperedge};
    use crate::relational::{Constraint, Database, Fact, FactSet, Query};

    fn fact(r: &str, tuple: &[&str]) -> Fact {
        Fact::new(r, tuple.to_vec())
    }

    fn path_hypergraph() -> LabeledHypergraph {
        let db = Database::new(vec![
            fact("R", &["a", "b"]),
            fact("R", &["c", "b"]),
            fact("R", &["c", "d"]),
            fact("R", &["e", "d"]),
            fact("R", &["e", "f"]),
        ])
        .unwrap();
        let sigma = vec![Constraint::key("R", [1]), Constraint::key("R", [2])];
        build_solution_conflict(&db, &sigma, &Query::False)
    }

    #[test]
    fn path_decomposes_at_width_one() {
        let h = path_hypergraph();
        for heuristic in [Heuristic::MinFill, Heuristic::MinDegree] {
            let t = decompose(&h, heuristic);
            assert!(validate(&t, &h));
            assert_eq!(t.width(), 1);
        }
    }

    #[test]
    fn isolated_node_gets_a_singleton_bag() {
        let h = LabeledHypergraph::new(1, vec![]);
        let t = decompose(&h, Heuristic::MinFill);
        assert!(validate(&t, &h));
        assert_eq!(t.width(), 0);
        assert_eq!(t.bag_count(), 1);
    }

    #[test]
    fn complete_bipartite_width_is_at_least_exact() {
        for n in 2..=4usize {
            let mut g = SimpleGraph::new(2 * n);
            for i in 0..n {
                for j in 0..n {
                    g.add_edge(i, n + j);
                }
            }
            let h = LabeledHypergraph::new(
                2 * n,
                g.edges()
                    .into_iter()
                    .map(|(u, v)| Hyperedge {
                        facts: FactSet::from([u, v]),
                        label: crate::hypergraphs::EdgeLabel::Solution,
                    })
                    .collect(),
            );
            let exact = exact_treewidth(&g, 12).unwrap();
            assert_eq!(exact, n);
            let t = decompose(&h, Heuristic::MinFill);
            assert!(validate(&t, &h));
            assert!(t.width() >= exact);
        }
    }

    #[test]
    fn paper_style_path_decomposition_validates() {
        let h = path_hypergraph();
        let bags = vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 4]];
        let edges = BTreeSet::from([(0, 1), (1, 2), (2, 3)]);
        let t = RootedDecomposition::new(bags.clone(), edges, 0).unwrap();
        assert!(validate(&t, &h));
        assert_eq!(t.width(), 1);

        // swapping an edge breaks the connectivity condition for node 1
        let broken = RootedDecomposition::new(
            bags.clone(),
            BTreeSet::from([(0, 2), (1, 2), (2, 3)]),
            0,
        )
        .unwrap();
        assert!(!validate(&broken, &h));

        // dropping a covering bag breaks edge subsumption
        let missing = RootedDecomposition::new(
            vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3], vec![4]],
            BTreeSet::from([(0, 1), (1, 2), (2, 3), (3, 4)]),
            0,
        )
        .unwrap();
        assert!(!validate(&missing, &h));
    }

    #[test]
    fn exact_treewidth_small_cases() {
        let mut path5 = SimpleGraph::new(5);
        for i in 0..4 {
            path5.add_edge(i, i + 1);
        }
        assert_eq!(exact_treewidth(&path5, 12).unwrap(), 1);

        let edgeless = SimpleGraph::new(6);
        assert_eq!(exact_treewidth(&edgeless, 12).unwrap(), 0);

        let mut k33 = SimpleGraph::new(6);
        for i in 0..3 {
            for j in 0..3 {
                k33.add_edge(i, 3 + j);
            }
        }
        assert_eq!(exact_treewidth(&k33, 12).unwrap(), 3);
    }

    #[test]
    fn exact_treewidth_handles_components_independently() {
        // K_{3,3} plus isolated vertices: the guard applies per component
        let mut g = SimpleGraph::new(15);
        for i in 0..3 {
            for j in 0..3 {
                g.add_edge(i, 3 + j);
            }
        }
        assert_eq!(exact_treewidth(&g, 12).unwrap(), 3);
    }

    #[test]
    fn rooting_and_child_order() {
        let h = path_hypergraph();
        let bags = vec![vec![0, 1], vec![1, 2]];
        // two-bag path over a 3-node prefix needs its own hypergraph
        let _ = h;
        let t = RootedDecomposition::new(bags, BTreeSet::from([(0, 1)]), 0).unwrap();
        assert_eq!(t.children(0), &[1]);
        assert_eq!(t.children(1), &[] as &[usize]);
        let rerooted = root_and_order(&t, 1).unwrap();
        assert_eq!(rerooted.children(1), &[0]);

        // star rooted at the center lists leaves in canonical order
        let star = RootedDecomposition::new(
            vec![vec![0], vec![0, 3], vec![0, 1], vec![0, 2]],
            BTreeSet::from([(0, 1), (0, 2), (0, 3)]),
            0,
        )
        .unwrap();
        assert_eq!(star.children(0), &[2, 3, 1]);
    }

    #[test]
    fn heuristic_width_dominates_exact_width() {
        let h = path_hypergraph();
        let g = primal_graph(&h);
        let exact = exact_treewidth(&g, 12).unwrap();
        for heuristic in [Heuristic::MinFill, Heuristic::MinDegree] {
            assert!(decompose(&h, heuristic).width() >= exact);
        }
    }
}
