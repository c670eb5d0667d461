//! Per-posture minimum-total-ETX trees.
//!
//! For each posture, every node gets exactly one preselected parent such
//! that the summed ETX of the path to the sink is minimal over the posture's
//! connectivity graph. One tree per posture, computed offline; forwarding at
//! run time is a plain walk up the parent pointers.

use std::collections::BTreeMap;

use crate::channel::{ChannelTable, ConnectivityGraph, PostureId, RadioBudget};
use crate::error::{Error, Result};
use crate::topology::{BodyTopology, NodeId};

/// Minimum-ETX spanning tree of one posture, rooted at the sink.
#[derive(Debug, Clone, PartialEq)]
pub struct PpvgTree {
    pub posture: PostureId,
    pub sink: NodeId,
    /// Parent of each non-sink node.
    pub parent: BTreeMap<NodeId, NodeId>,
    /// ETX of the edge from each non-sink node to its parent.
    pub link_etx: BTreeMap<NodeId, f64>,
    /// Summed ETX of the path from each node to the sink (0 at the sink).
    pub total_etx: BTreeMap<NodeId, f64>,
}

impl PpvgTree {
    pub fn parent_of(&self, node: NodeId) -> Option<NodeId> {
        self.parent.get(&node).copied()
    }

    /// The tree path from `node` up to the sink, inclusive.
    pub fn path_to_sink(&self, node: NodeId) -> Vec<NodeId> {
        let mut path = vec![node];
        let mut cur = node;
        while let Some(p) = self.parent_of(cur) {
            path.push(p);
            cur = p;
        }
        path
    }

    /// Render as the export table `posture,node,parent,link_etx,total_etx`,
    /// ascending by node id, without header.
    pub fn export_rows(&self) -> Vec<String> {
        self.parent
            .iter()
            .map(|(node, parent)| {
                format!(
                    "{},{},{},{:.6},{:.6}",
                    self.posture, node, parent, self.link_etx[node], self.total_etx[node]
                )
            })
            .collect()
    }
}

/// Label of one node during the shortest-path computation. Ordered so that
/// smaller is better: less total ETX, then fewer hops, then lower id.
#[derive(Clone, Copy, PartialEq)]
struct Label {
    total: f64,
    hops: u32,
}

fn better(cand: (f64, u32, NodeId), best: (f64, u32, NodeId)) -> bool {
    if cand.0 != best.0 {
        return cand.0 < best.0;
    }
    if cand.1 != best.1 {
        return cand.1 < best.1;
    }
    cand.2 < best.2
}

/// Build the minimum-total-ETX tree over `graph`, rooted at `sink`.
///
/// Label-setting shortest path with edge weight = ETX; ties are broken by
/// fewer hops, then by the lower parent id, so the output is deterministic.
pub fn build_ppvg_tree(graph: &ConnectivityGraph, sink: NodeId) -> Result<PpvgTree> {
    let n = graph.node_count();
    let mut settled = vec![false; n];
    let mut label: Vec<Option<Label>> = vec![None; n];
    let mut parent: Vec<Option<NodeId>> = vec![None; n];
    label[sink.index()] = Some(Label { total: 0.0, hops: 0 });

    for _ in 0..n {
        // Select the best unsettled labelled node (the node set is tiny, so a
        // linear scan keeps the tie-breaking rules explicit).
        let mut next: Option<(NodeId, Label)> = None;
        for i in 0..n {
            if settled[i] {
                continue;
            }
            if let Some(l) = label[i] {
                let id = NodeId(i as u8);
                match next {
                    None => next = Some((id, l)),
                    Some((bid, bl)) => {
                        if better((l.total, l.hops, id), (bl.total, bl.hops, bid)) {
                            next = Some((id, l));
                        }
                    }
                }
            }
        }
        let Some((u, lu)) = next else { break };
        settled[u.index()] = true;

        for &v in graph.neighbors(u) {
            if settled[v.index()] {
                continue;
            }
            let etx = graph.edge(u, v).expect("neighbor implies edge").etx;
            let cand = Label {
                total: lu.total + etx,
                hops: lu.hops + 1,
            };
            let take = match label[v.index()] {
                None => true,
                Some(cur) => better(
                    (cand.total, cand.hops, u),
                    (
                        cur.total,
                        cur.hops,
                        parent[v.index()].expect("labelled non-sink has a parent"),
                    ),
                ),
            };
            if take {
                label[v.index()] = Some(cand);
                parent[v.index()] = Some(u);
            }
        }
    }

    let mut tree = PpvgTree {
        posture: graph.posture(),
        sink,
        parent: BTreeMap::new(),
        link_etx: BTreeMap::new(),
        total_etx: BTreeMap::new(),
    };
    tree.total_etx.insert(sink, 0.0);
    for i in 0..n {
        let v = NodeId(i as u8);
        if v == sink {
            continue;
        }
        let Some(l) = label[i] else {
            return Err(Error::config(format!(
                "node {v} cannot reach the sink in posture {}",
                graph.posture()
            )));
        };
        let p = parent[i].expect("labelled non-sink has a parent");
        tree.parent.insert(v, p);
        tree.link_etx
            .insert(v, graph.edge(v, p).expect("tree edge exists").etx);
        tree.total_etx.insert(v, l.total);
    }
    Ok(tree)
}

/// One tree per posture, each independently minimal.
pub fn ppvg_trees_all_postures(
    table: &ChannelTable,
    topology: &BodyTopology,
    budget: &RadioBudget,
    threshold: f64,
    sink: NodeId,
) -> Result<BTreeMap<PostureId, PpvgTree>> {
    let mut out = BTreeMap::new();
    for posture in PostureId::ALL {
        let graph = crate::channel::connectivity_graph(table, topology, posture, budget, threshold)?;
        let tree = build_ppvg_tree(&graph, sink)
            .map_err(|e| Error::config(format!("posture {posture}: {e}")))?;
        out.insert(posture, tree);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{connectivity_graph, ChannelTable, LinkStats};

    fn posture(n: u8) -> PostureId {
        PostureId::new(n).unwrap()
    }

    /// Build a graph directly from explicit (a, b, etx) edges.
    fn graph_from_edges(n: usize, edges: &[(u8, u8, f64)]) -> ConnectivityGraph {
        // Dial the mean so the probability equals 1/etx, via bisection.
        let topo = BodyTopology::new(
            (0..n).map(|i| format!("n{i}")).collect(),
            NodeId(0),
        )
        .unwrap();
        let budget = RadioBudget::default();
        let mut table = ChannelTable::new();
        for &(a, b, etx) in edges {
            let p = 1.0 / etx;
            let (mut lo, mut hi) = (-100.0, 300.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if crate::channel::gaussian_cdf(40.0, mid, 5.0) > p {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            table
                .insert(LinkStats::new(posture(1), NodeId(a), NodeId(b), 0.5 * (lo + hi), 5.0).unwrap())
                .unwrap();
        }
        // Pairs not listed stay missing: build the graph pairwise by hand.
        let mut g_edges = Vec::new();
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b, _) in edges {
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            let s = table.stats(posture(1), NodeId(a), NodeId(b)).unwrap();
            let p = crate::channel::link_success_probability(s, &budget);
            g_edges.push((NodeId(a), NodeId(b), p));
            neighbors[a as usize].push(NodeId(b));
            neighbors[b as usize].push(NodeId(a));
        }
        // Mirror connectivity_graph output through the public constructor:
        // use a complete table clone where missing pairs are hopeless links.
        let mut full = ChannelTable::new();
        for (a, b) in topo.pairs() {
            if let Some(s) = table.stats(posture(1), a, b) {
                full.insert(*s).unwrap();
            } else {
                full.insert(LinkStats::new(posture(1), a, b, 500.0, 5.0).unwrap())
                    .unwrap();
            }
        }
        connectivity_graph(&full, &topo, posture(1), &budget, 0.01).unwrap()
    }

    /// Brute force: minimum total ETX over all simple paths node -> sink.
    fn brute_force_min(graph: &ConnectivityGraph, from: NodeId, sink: NodeId) -> Option<f64> {
        fn rec(
            graph: &ConnectivityGraph,
            cur: NodeId,
            sink: NodeId,
            visited: &mut Vec<bool>,
            acc: f64,
            best: &mut Option<f64>,
        ) {
            if cur == sink {
                if best.is_none_or(|b| acc < b) {
                    *best = Some(acc);
                }
                return;
            }
            for &n in graph.neighbors(cur) {
                if !visited[n.index()] {
                    visited[n.index()] = true;
                    let etx = graph.edge(cur, n).unwrap().etx;
                    rec(graph, n, sink, visited, acc + etx, best);
                    visited[n.index()] = false;
                }
            }
        }
        let mut visited = vec![false; graph.node_count()];
        visited[from.index()] = true;
        let mut best = None;
        rec(graph, from, sink, &mut visited, 0.0, &mut best);
        best
    }

    #[test]
    fn relay_beats_direct_edge() {
        // {s,a} etx 2, {a,b} etx 1, {s,b} etx 4 -> parent(b) = a, total 3.
        let g = graph_from_edges(3, &[(0, 1, 2.0), (1, 2, 1.0), (0, 2, 4.0)]);
        let tree = build_ppvg_tree(&g, NodeId(0)).unwrap();
        assert_eq!(tree.parent_of(NodeId(2)), Some(NodeId(1)));
        let brute = brute_force_min(&g, NodeId(2), NodeId(0)).unwrap();
        assert!((tree.total_etx[&NodeId(2)] - brute).abs() < 1e-9);
        assert!((tree.total_etx[&NodeId(2)] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn single_edge_tree() {
        let g = graph_from_edges(2, &[(0, 1, 1.5)]);
        let tree = build_ppvg_tree(&g, NodeId(0)).unwrap();
        assert_eq!(tree.parent_of(NodeId(1)), Some(NodeId(0)));
        assert!((tree.total_etx[&NodeId(1)] - 1.5).abs() < 1e-6);
    }

    #[test]
    fn complete_lossless_graph_is_a_star() {
        let edges: Vec<(u8, u8, f64)> = (0..7u8)
            .flat_map(|a| ((a + 1)..7).map(move |b| (a, b, 1.0)))
            .collect();
        let g = graph_from_edges(7, &edges);
        let tree = build_ppvg_tree(&g, NodeId(0)).unwrap();
        for v in 1..7u8 {
            assert_eq!(tree.parent_of(NodeId(v)), Some(NodeId(0)));
            assert!((tree.total_etx[&NodeId(v)] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn equal_totals_prefer_fewer_hops_then_lower_id() {
        // Two exact-ETX-2 routes to node 3: direct (1 hop) and via 1 (2 hops).
        let g = graph_from_edges(4, &[(0, 1, 1.0), (1, 3, 1.0), (0, 3, 2.0), (0, 2, 1.0), (2, 3, 1.0)]);
        let tree = build_ppvg_tree(&g, NodeId(0)).unwrap();
        // totals: direct 2.0, via 1: 2.0, via 2: 2.0 -> fewer hops wins.
        assert_eq!(tree.parent_of(NodeId(3)), Some(NodeId(0)));

        // Without the direct edge the two 2-hop routes tie; lower relay wins.
        let g = graph_from_edges(4, &[(0, 1, 1.0), (1, 3, 1.0), (0, 2, 1.0), (2, 3, 1.0)]);
        let tree = build_ppvg_tree(&g, NodeId(0)).unwrap();
        assert_eq!(tree.parent_of(NodeId(3)), Some(NodeId(1)));
    }

    #[test]
    fn disconnected_node_is_an_error_naming_it() {
        let g = graph_from_edges(3, &[(0, 1, 1.0)]);
        let err = build_ppvg_tree(&g, NodeId(0)).unwrap_err();
        assert!(err.to_string().contains("node 2"), "{err}");
    }

    #[test]
    fn totals_match_brute_force_on_random_graphs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1234);
        for round in 0..100 {
            let n = rng.gen_range(2..=7usize);
            // random connected graph: a random spanning tree plus extras
            let mut edges: Vec<(u8, u8, f64)> = Vec::new();
            for v in 1..n as u8 {
                let u = rng.gen_range(0..v);
                edges.push((u, v, rng.gen_range(1.0..8.0)));
            }
            for a in 0..n as u8 {
                for b in (a + 1)..n as u8 {
                    if edges.iter().any(|&(x, y, _)| (x, y) == (a, b)) {
                        continue;
                    }
                    if rng.gen_bool(0.4) {
                        edges.push((a, b, rng.gen_range(1.0..8.0)));
                    }
                }
            }
            let g = graph_from_edges(n, &edges);
            let tree = build_ppvg_tree(&g, NodeId(0)).unwrap();
            for v in 1..n as u8 {
                let brute = brute_force_min(&g, NodeId(v), NodeId(0)).unwrap();
                let got = tree.total_etx[&NodeId(v)];
                assert!(
                    (got - brute).abs() < 1e-9,
                    "round {round}: node {v} tree {got} vs brute {brute}"
                );
            }
        }
    }

    #[test]
    fn identical_stats_produce_identical_trees() {
        let topo = BodyTopology::body_default();
        let mut table = ChannelTable::new();
        for p in PostureId::ALL {
            for (a, b) in topo.pairs() {
                table
                    .insert(LinkStats::new(p, a, b, 35.0, 5.0).unwrap())
                    .unwrap();
            }
        }
        let trees =
            ppvg_trees_all_postures(&table, &topo, &RadioBudget::default(), 0.01, NodeId(0)).unwrap();
        assert_eq!(trees.len(), 7);
        let first = &trees[&posture(1)];
        for p in PostureId::ALL {
            assert_eq!(trees[&p].parent, first.parent);
        }
    }

    #[test]
    fn posture_error_is_contextualised() {
        let topo = BodyTopology::body_default();
        let mut table = ChannelTable::new();
        for p in PostureId::ALL {
            for (a, b) in topo.pairs() {
                // Posture 5 isolates node 6 entirely.
                let mean = if p.id() == 5 && (a == NodeId(6) || b == NodeId(6)) {
                    500.0
                } else {
                    30.0
                };
                table
                    .insert(LinkStats::new(p, a, b, mean, 5.0).unwrap())
                    .unwrap();
            }
        }
        let err = ppvg_trees_all_postures(&table, &topo, &RadioBudget::default(), 0.01, NodeId(0))
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("posture 5") && msg.contains("node 6"), "{msg}");
    }
}
