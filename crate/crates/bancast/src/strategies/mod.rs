//! The fourteen convergecast strategies as event-driven state machines.

mod attenuation;
mod ctp;
mod gossip;
mod multipath;
mod orw;
mod tree;

use std::collections::BTreeMap;

use crate::channel::ConnectivityGraph;
use crate::engine::Strategy;
use crate::error::{Error, Result};
use crate::ppvg::PpvgTree;
use crate::topology::NodeId;

pub use attenuation::{attenuation_select, AttnKind, Reply};
pub use ctp::Ctp;
pub use gossip::{gossip_decision, GossipAction, GossipKind};
pub use multipath::{multipath_next_hops, MultipathKind};
pub use orw::Orw;
pub use tree::PpvgForwarding;

/// Every strategy the simulator knows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StrategyKind {
    Apap,
    Appp,
    Ppap,
    Pppp,
    MinAtt,
    BothMinAtt,
    CloseToMe,
    RandAtt,
    Ctp,
    Orw,
    FloodToSink,
    ProbaCvg,
    PrunedCvg,
    Ppvg,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 14] = [
        StrategyKind::Apap,
        StrategyKind::Appp,
        StrategyKind::Ppap,
        StrategyKind::Pppp,
        StrategyKind::MinAtt,
        StrategyKind::BothMinAtt,
        StrategyKind::CloseToMe,
        StrategyKind::RandAtt,
        StrategyKind::Ctp,
        StrategyKind::Orw,
        StrategyKind::FloodToSink,
        StrategyKind::ProbaCvg,
        StrategyKind::PrunedCvg,
        StrategyKind::Ppvg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Apap => "apap",
            StrategyKind::Appp => "appp",
            StrategyKind::Ppap => "ppap",
            StrategyKind::Pppp => "pppp",
            StrategyKind::MinAtt => "minatt",
            StrategyKind::BothMinAtt => "bothminatt",
            StrategyKind::CloseToMe => "closetome",
            StrategyKind::RandAtt => "randatt",
            StrategyKind::Ctp => "ctp",
            StrategyKind::Orw => "orw",
            StrategyKind::FloodToSink => "floodtosink",
            StrategyKind::ProbaCvg => "probacvg",
            StrategyKind::PrunedCvg => "prunedcvg",
            StrategyKind::Ppvg => "ppvg",
        }
    }

    /// Does this strategy need a parent overlay?
    pub fn is_multipath(self) -> bool {
        matches!(
            self,
            StrategyKind::Apap | StrategyKind::Appp | StrategyKind::Ppap | StrategyKind::Pppp
        )
    }

    /// CTP and ORW always run the conventional ACK policy.
    pub fn forces_ack(self) -> bool {
        matches!(self, StrategyKind::Ctp | StrategyKind::Orw)
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == lower)
            .ok_or_else(|| Error::config(format!("unknown strategy {s:?}")))
    }
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A predetermined parent overlay: each non-sink node's ordered parent set.
pub type ParentOverlay = BTreeMap<NodeId, Vec<NodeId>>;

/// Default overlay: a hop-count gradient over the connectivity graph.
/// A node's parents are its neighbors strictly closer to the sink.
pub fn hop_gradient_overlay(graph: &ConnectivityGraph, sink: NodeId) -> Result<ParentOverlay> {
    let hops = graph.hop_counts(sink);
    let mut overlay = ParentOverlay::new();
    for i in 0..graph.node_count() {
        let v = NodeId(i as u8);
        if v == sink {
            continue;
        }
        let Some(my_hops) = hops[i] else {
            return Err(Error::config(format!(
                "node {v} cannot reach the sink in posture {}",
                graph.posture()
            )));
        };
        let parents: Vec<NodeId> = graph
            .neighbors(v)
            .iter()
            .copied()
            .filter(|&u| hops[u.index()].is_some_and(|h| h < my_hops))
            .collect();
        if parents.is_empty() {
            return Err(Error::config(format!(
                "node {v} has an empty parent set in posture {}",
                graph.posture()
            )));
        }
        overlay.insert(v, parents);
    }
    Ok(overlay)
}

/// Check a (possibly user-supplied) overlay: parents must be graph
/// neighbors, and every non-sink node must reach the sink through it.
pub fn validate_overlay(
    graph: &ConnectivityGraph,
    overlay: &ParentOverlay,
    sink: NodeId,
) -> Result<()> {
    for i in 0..graph.node_count() {
        let v = NodeId(i as u8);
        if v == sink {
            continue;
        }
        let Some(parents) = overlay.get(&v) else {
            return Err(Error::config(format!("overlay is missing node {v}")));
        };
        if parents.is_empty() {
            return Err(Error::config(format!("node {v} has an empty parent set")));
        }
        for &p in parents {
            if graph.edge(v, p).is_none() {
                return Err(Error::config(format!(
                    "overlay parent {p} of node {v} is not a neighbor in posture {}",
                    graph.posture()
                )));
            }
        }
    }
    // Reachability: walk the overlay from every node; cycles or dead ends
    // would keep the budget from hitting zero.
    for &start in overlay.keys() {
        let mut frontier = vec![start];
        let mut seen = vec![false; graph.node_count()];
        seen[start.index()] = true;
        let mut reached = false;
        while let Some(v) = frontier.pop() {
            if v == sink {
                reached = true;
                break;
            }
            for &p in overlay.get(&v).map(|v| v.as_slice()).unwrap_or(&[]) {
                if !seen[p.index()] {
                    seen[p.index()] = true;
                    frontier.push(p);
                }
            }
        }
        if !reached {
            return Err(Error::config(format!(
                "node {start} cannot reach the sink through the overlay"
            )));
        }
    }
    Ok(())
}

/// Build one node's strategy instance.
pub fn build_strategy(
    kind: StrategyKind,
    node: NodeId,
    sink: NodeId,
    overlay: Option<&ParentOverlay>,
    tree: Option<&PpvgTree>,
) -> Box<dyn Strategy> {
    match kind {
        StrategyKind::Apap | StrategyKind::Appp | StrategyKind::Ppap | StrategyKind::Pppp => {
            let mp_kind = match kind {
                StrategyKind::Apap => MultipathKind::Apap,
                StrategyKind::Appp => MultipathKind::Appp,
                StrategyKind::Ppap => MultipathKind::Ppap,
                _ => MultipathKind::Pppp,
            };
            let parents = overlay
                .and_then(|o| o.get(&node))
                .cloned()
                .unwrap_or_default();
            Box::new(multipath::Multipath::new(mp_kind, parents))
        }
        StrategyKind::MinAtt | StrategyKind::BothMinAtt | StrategyKind::CloseToMe
        | StrategyKind::RandAtt => {
            let at_kind = match kind {
                StrategyKind::MinAtt => AttnKind::MinAtt,
                StrategyKind::BothMinAtt => AttnKind::BothMinAtt,
                StrategyKind::CloseToMe => AttnKind::CloseToMe,
                _ => AttnKind::RandAtt,
            };
            Box::new(attenuation::Attenuation::new(at_kind))
        }
        StrategyKind::Ctp => Box::new(Ctp::new(node == sink)),
        StrategyKind::Orw => Box::new(Orw::new(node == sink)),
        StrategyKind::FloodToSink => Box::new(gossip::Gossip::new(GossipKind::FloodToSink)),
        StrategyKind::ProbaCvg => Box::new(gossip::Gossip::new(GossipKind::ProbaCvg)),
        StrategyKind::PrunedCvg => Box::new(gossip::Gossip::new(GossipKind::PrunedCvg)),
        StrategyKind::Ppvg => {
            Box::new(PpvgForwarding::new(tree.and_then(|t| t.parent_of(node))))
        }
    }
}
