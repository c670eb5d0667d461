//! The on-body network: node identities, labels, and the sink.

use crate::error::{Error, Result};

/// Identifier of one on-body sensor node.
///
/// The reference network uses ids 0..=6 (navel, chest, head, upper arm,
/// ankle, thigh, wrist); arbitrary N-node topologies are allowed via config.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u8);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Node labels of the seven-sensor reference deployment, indexed by id.
pub const BODY_LABELS: [&str; 7] = [
    "navel",
    "chest",
    "head",
    "upper arm",
    "ankle",
    "thigh",
    "wrist",
];

/// A validated convergecast topology: the node set, the sink, and the
/// traffic sources (every non-sink node unless overridden).
#[derive(Debug, Clone)]
pub struct BodyTopology {
    nodes: Vec<(NodeId, String)>,
    sink: NodeId,
    sources: Vec<NodeId>,
}

impl BodyTopology {
    /// Build a topology from explicit node labels and a sink choice.
    /// Sources default to every non-sink node.
    pub fn new(labels: Vec<String>, sink: NodeId) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::config("topology declares no nodes"));
        }
        if labels.len() > u8::MAX as usize {
            return Err(Error::config("topology exceeds the supported node count"));
        }
        let nodes: Vec<(NodeId, String)> = labels
            .into_iter()
            .enumerate()
            .map(|(i, l)| (NodeId(i as u8), l))
            .collect();
        for (i, (_, l)) in nodes.iter().enumerate() {
            if nodes[..i].iter().any(|(_, other)| other == l) {
                return Err(Error::config(format!("duplicate node label {l:?}")));
            }
        }
        if sink.index() >= nodes.len() {
            return Err(Error::config(format!(
                "sink {} is not among the {} declared nodes",
                sink,
                nodes.len()
            )));
        }
        let sources = nodes
            .iter()
            .map(|&(id, _)| id)
            .filter(|&id| id != sink)
            .collect();
        Ok(BodyTopology {
            nodes,
            sink,
            sources,
        })
    }

    /// The seven-node reference deployment with the sink at node 0 (navel).
    pub fn body_default() -> Self {
        Self::new(
            BODY_LABELS.iter().map(|s| s.to_string()).collect(),
            NodeId(0),
        )
        .expect("reference topology is valid")
    }

    /// Same deployment with a different sink.
    pub fn body_with_sink(sink: NodeId) -> Result<Self> {
        Self::new(
            BODY_LABELS.iter().map(|s| s.to_string()).collect(),
            sink,
        )
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn sink(&self) -> NodeId {
        self.sink
    }

    pub fn sources(&self) -> &[NodeId] {
        &self.sources
    }

    /// Override the source set. Each source must be a declared non-sink node.
    pub fn set_sources(&mut self, sources: Vec<NodeId>) -> Result<()> {
        for &s in &sources {
            if s.index() >= self.nodes.len() {
                return Err(Error::config(format!("source {s} is not a declared node")));
            }
            if s == self.sink {
                return Err(Error::config("the sink cannot be a traffic source"));
            }
        }
        self.sources = sources;
        Ok(())
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().map(|&(id, _)| id)
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.nodes[id.index()].1
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.index() < self.nodes.len()
    }

    /// All unordered node pairs `{a, b}` with `a < b`.
    pub fn pairs(&self) -> Vec<(NodeId, NodeId)> {
        let n = self.nodes.len() as u8;
        let mut out = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                out.push((NodeId(a), NodeId(b)));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_topology_matches_reference() {
        let t = BodyTopology::body_default();
        assert_eq!(t.len(), 7);
        assert_eq!(t.sink(), NodeId(0));
        assert_eq!(t.sources(), &[NodeId(1), NodeId(2), NodeId(3), NodeId(4), NodeId(5), NodeId(6)]);
        assert_eq!(t.label(NodeId(4)), "ankle");
        assert_eq!(t.pairs().len(), 21);
    }

    #[test]
    fn sink_override_complements_sources() {
        let t = BodyTopology::body_with_sink(NodeId(1)).unwrap();
        assert_eq!(
            t.sources(),
            &[NodeId(0), NodeId(2), NodeId(3), NodeId(4), NodeId(5), NodeId(6)]
        );
    }

    #[test]
    fn out_of_range_sink_rejected() {
        let labels: Vec<String> = (0..7).map(|i| format!("n{i}")).collect();
        assert!(BodyTopology::new(labels, NodeId(7)).is_err());
    }

    #[test]
    fn duplicate_labels_rejected() {
        let labels = vec!["a".to_string(), "a".to_string()];
        assert!(BodyTopology::new(labels, NodeId(0)).is_err());
    }

    #[test]
    fn source_override_validated() {
        let mut t = BodyTopology::body_default();
        assert!(t.set_sources(vec![NodeId(0)]).is_err());
        assert!(t.set_sources(vec![NodeId(2), NodeId(5)]).is_ok());
        assert_eq!(t.sources(), &[NodeId(2), NodeId(5)]);
    }
}
