//! Shared helpers for the integration and acceptance suites.
//!
//! Each test binary compiles this module and uses its own subset.
#![allow(dead_code)]

use std::path::PathBuf;

use bancast::channel::{
    connectivity_graph, gaussian_cdf, ChannelTable, ConnectivityGraph, LinkStats, PostureId,
    RadioBudget,
};
use bancast::topology::{BodyTopology, NodeId};

/// Path of the synthetic channel statistics shipped with the crate.
pub fn shipped_table_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/channel_synthetic.csv")
}

pub fn shipped_table() -> ChannelTable {
    ChannelTable::load_csv(&shipped_table_path()).expect("shipped table parses")
}

/// Mean attenuation whose success probability against the default 40 dB
/// budget equals `p`, at the given stddev (bisection on the CDF).
pub fn mean_for_probability(p: f64, sd: f64) -> f64 {
    let (mut lo, mut hi) = (-100.0, 300.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gaussian_cdf(40.0, mid, sd) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A topology of `n` unnamed nodes with sink 0 plus a full table where the
/// listed pairs carry the given success probability and every unlisted pair
/// is far beyond the budget. A small per-posture attenuation offset keeps
/// the seven postures distinct without changing the design.
pub fn table_from_probabilities(
    n: usize,
    links: &[(u8, u8, f64)],
) -> (ChannelTable, BodyTopology) {
    let topo = BodyTopology::new((0..n).map(|i| format!("n{i}")).collect(), NodeId(0)).unwrap();
    let mut table = ChannelTable::new();
    for posture in PostureId::ALL {
        for (a, b) in topo.pairs() {
            let link = links
                .iter()
                .find(|&&(x, y, _)| (NodeId(x), NodeId(y)) == (a, b) || (NodeId(y), NodeId(x)) == (a, b));
            let (mean, sd) = match link {
                Some(&(_, _, p)) => (
                    mean_for_probability(p, 5.0) + 0.2 * (posture.id() - 1) as f64,
                    5.0,
                ),
                None => (500.0, 5.0),
            };
            table
                .insert(LinkStats::new(posture, a, b, mean, sd).unwrap())
                .unwrap();
        }
    }
    (table, topo)
}

/// Connectivity graph for one posture of a (table, topology) pair under the
/// default budget and threshold.
pub fn graph_of(table: &ChannelTable, topo: &BodyTopology, posture: u8) -> ConnectivityGraph {
    connectivity_graph(
        table,
        topo,
        PostureId::new(posture).unwrap(),
        &RadioBudget::default(),
        0.01,
    )
    .unwrap()
}

/// Minimum total ETX over all simple paths from `from` to `sink`, by
/// exhaustive enumeration. Independent of the tree builder.
pub fn brute_force_min_etx(graph: &ConnectivityGraph, from: NodeId, sink: NodeId) -> Option<f64> {
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
