//! Posture-centric statistical channel model.
//!
//! Every link between two on-body nodes is characterised, per posture, by the
//! mean and standard deviation of its attenuation in dB. A transmission adds
//! a fresh Gaussian attenuation draw; the frame survives iff the received
//! signal stays at or above the radio sensitivity. The probability of that
//! event is the normal CDF evaluated at the link budget, and its reciprocal
//! is the link's expected transmission count (ETX).

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::topology::{BodyTopology, NodeId};

/// Labels of the seven modelled postures, indexed by `id - 1`.
pub const POSTURE_LABELS: [&str; 7] = [
    "Walking",
    "Walking weakly",
    "Running",
    "Sitting down",
    "Lying down",
    "Sleeping",
    "Wearing a jacket",
];

/// One of the seven body postures (1..=7).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PostureId(u8);

impl PostureId {
    pub const ALL: [PostureId; 7] = [
        PostureId(1),
        PostureId(2),
        PostureId(3),
        PostureId(4),
        PostureId(5),
        PostureId(6),
        PostureId(7),
    ];

    pub fn new(id: u8) -> Result<Self> {
        if (1..=7).contains(&id) {
            Ok(PostureId(id))
        } else {
            Err(Error::config(format!("posture id {id} outside 1..=7")))
        }
    }

    pub fn id(self) -> u8 {
        self.0
    }

    pub fn label(self) -> &'static str {
        POSTURE_LABELS[(self.0 - 1) as usize]
    }
}

impl std::fmt::Display for PostureId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Attenuation statistics of one unordered node pair in one posture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkStats {
    pub posture: PostureId,
    pub a: NodeId,
    pub b: NodeId,
    pub mean_db: f64,
    pub stddev_db: f64,
}

impl LinkStats {
    pub fn new(posture: PostureId, a: NodeId, b: NodeId, mean_db: f64, stddev_db: f64) -> Result<Self> {
        if a == b {
            return Err(Error::config(format!("link stats for a self-pair {a}")));
        }
        if stddev_db.is_nan() || stddev_db < 0.0 || !stddev_db.is_finite() {
            return Err(Error::config(format!(
                "link {{{a},{b}}} posture {posture}: stddev {stddev_db} must be finite and >= 0"
            )));
        }
        if !mean_db.is_finite() {
            return Err(Error::config(format!(
                "link {{{a},{b}}} posture {posture}: mean {mean_db} must be finite"
            )));
        }
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        Ok(LinkStats {
            posture,
            a,
            b,
            mean_db,
            stddev_db,
        })
    }
}

/// Transmit power and receiver sensitivity, both in dBm.
///
/// Their difference is the maximum attenuation a frame can survive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioBudget {
    pub tx_power_dbm: f64,
    pub sensitivity_dbm: f64,
}

impl RadioBudget {
    pub fn new(tx_power_dbm: f64, sensitivity_dbm: f64) -> Self {
        RadioBudget {
            tx_power_dbm,
            sensitivity_dbm,
        }
    }

    pub fn max_attenuation_db(&self) -> f64 {
        self.tx_power_dbm - self.sensitivity_dbm
    }
}

impl Default for RadioBudget {
    /// -60 dBm transmit power against -100 dBm sensitivity: a 40 dB budget.
    fn default() -> Self {
        RadioBudget::new(-60.0, -100.0)
    }
}

/// Default link-existence probability threshold: only links whose success
/// probability exceeds this are considered to exist at all.
pub const DEFAULT_PROBABILITY_THRESHOLD: f64 = 0.01;

/// Standard normal CDF of `(x - mean) / stddev`.
///
/// For the degenerate `stddev = 0` the distribution is a point mass at the
/// mean: 0 below it, 1 above it, and 1/2 exactly at it.
pub fn gaussian_cdf(x: f64, mean: f64, stddev: f64) -> f64 {
    debug_assert!(stddev >= 0.0);
    if stddev == 0.0 {
        return match x.partial_cmp(&mean) {
            Some(std::cmp::Ordering::Less) => 0.0,
            Some(std::cmp::Ordering::Greater) => 1.0,
            _ => 0.5,
        };
    }
    let z = (x - mean) / stddev;
    // erfc form avoids cancellation in the lower tail.
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Probability that a single transmission on the link survives the budget:
/// the chance the sampled attenuation stays within `max_attenuation_db`.
pub fn link_success_probability(stats: &LinkStats, budget: &RadioBudget) -> f64 {
    gaussian_cdf(budget.max_attenuation_db(), stats.mean_db, stats.stddev_db)
}

/// Expected transmission count of a link: `1 / p`.
pub fn expected_transmission_count(p: f64) -> Result<f64> {
    if p <= 0.0 {
        return Err(Error::UnusableLink);
    }
    Ok(1.0 / p)
}

/// Draw one attenuation value (dB) for a transmission on the link.
pub fn sample_attenuation<R: Rng + ?Sized>(stats: &LinkStats, rng: &mut R) -> f64 {
    if stats.stddev_db == 0.0 {
        return stats.mean_db;
    }
    let normal = Normal::new(stats.mean_db, stats.stddev_db)
        .expect("validated stats give a well-formed normal");
    normal.sample(rng)
}

/// The full per-posture, per-pair statistics table.
#[derive(Debug, Clone, Default)]
pub struct ChannelTable {
    entries: Vec<LinkStats>,
}

impl ChannelTable {
    pub fn new() -> Self {
        ChannelTable::default()
    }

    /// Insert one record; at most one per (posture, unordered pair).
    pub fn insert(&mut self, stats: LinkStats) -> Result<()> {
        if self.stats(stats.posture, stats.a, stats.b).is_some() {
            return Err(Error::config(format!(
                "duplicate link stats for posture {} pair {{{},{}}}",
                stats.posture, stats.a, stats.b
            )));
        }
        self.entries.push(stats);
        Ok(())
    }

    pub fn stats(&self, posture: PostureId, a: NodeId, b: NodeId) -> Option<&LinkStats> {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        self.entries
            .iter()
            .find(|s| s.posture == posture && s.a == a && s.b == b)
    }

    pub fn entries(&self) -> &[LinkStats] {
        &self.entries
    }

    /// Parse the statistics CSV: header `posture,node_a,node_b,mean_db,stddev_db`,
    /// one row per (posture, unordered pair).
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::config("channel table is empty"))?;
        let expected = "posture,node_a,node_b,mean_db,stddev_db";
        if header.trim() != expected {
            return Err(Error::config(format!(
                "channel table line 1: expected header {expected:?}, found {:?}",
                header.trim()
            )));
        }
        let mut table = ChannelTable::new();
        for (i, line) in lines {
            let row = i + 1; // 1-based line number
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 5 {
                return Err(Error::config(format!(
                    "channel table line {row}: expected 5 fields, found {}",
                    fields.len()
                )));
            }
            let parse_u8 = |s: &str, what: &str| {
                s.parse::<u8>().map_err(|_| {
                    Error::config(format!("channel table line {row}: bad {what} {s:?}"))
                })
            };
            let parse_f64 = |s: &str, what: &str| {
                s.parse::<f64>().map_err(|_| {
                    Error::config(format!("channel table line {row}: bad {what} {s:?}"))
                })
            };
            let posture = PostureId::new(parse_u8(fields[0], "posture")?)
                .map_err(|e| Error::config(format!("channel table line {row}: {e}")))?;
            let a = NodeId(parse_u8(fields[1], "node_a")?);
            let b = NodeId(parse_u8(fields[2], "node_b")?);
            let mean = parse_f64(fields[3], "mean_db")?;
            let sd = parse_f64(fields[4], "stddev_db")?;
            let stats = LinkStats::new(posture, a, b, mean, sd)
                .map_err(|e| Error::config(format!("channel table line {row}: {e}")))?;
            table
                .insert(stats)
                .map_err(|e| Error::config(format!("channel table line {row}: {e}")))?;
        }
        Ok(table)
    }

    /// Load and parse a statistics CSV from disk.
    pub fn load_csv(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse_csv(&text)
    }

    /// Require a record for every posture and every unordered pair of the
    /// topology. Errors name the first missing (posture, pair).
    pub fn validate_coverage(&self, topology: &BodyTopology) -> Result<()> {
        for posture in PostureId::ALL {
            for (a, b) in topology.pairs() {
                if self.stats(posture, a, b).is_none() {
                    return Err(Error::config(format!(
                        "channel table is missing pair {{{a},{b}}} for posture {posture}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Load, parse, and check coverage in one step.
    pub fn load_validated(path: &std::path::Path, topology: &BodyTopology) -> Result<Self> {
        let table = Self::load_csv(path)?;
        table.validate_coverage(topology)?;
        Ok(table)
    }
}

/// One usable link of a posture's connectivity graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphEdge {
    pub a: NodeId,
    pub b: NodeId,
    pub probability: f64,
    pub etx: f64,
}

/// The links that exist in one posture: every pair whose success probability
/// strictly exceeds the threshold, annotated with probability and ETX.
#[derive(Debug, Clone)]
pub struct ConnectivityGraph {
    posture: PostureId,
    node_count: usize,
    edges: Vec<GraphEdge>,
    neighbors: Vec<Vec<NodeId>>,
}

impl ConnectivityGraph {
    pub fn posture(&self) -> PostureId {
        self.posture
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    /// Neighbors of `v`, ascending by id.
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.neighbors[v.index()]
    }

    pub fn edge(&self, a: NodeId, b: NodeId) -> Option<&GraphEdge> {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        self.edges.iter().find(|e| e.a == a && e.b == b)
    }

    /// Hop distance from every node to `root` (BFS), `None` if unreachable.
    pub fn hop_counts(&self, root: NodeId) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.node_count];
        dist[root.index()] = Some(0);
        let mut frontier = std::collections::VecDeque::new();
        frontier.push_back(root);
        while let Some(v) = frontier.pop_front() {
            let d = dist[v.index()].unwrap();
            for &n in self.neighbors(v) {
                if dist[n.index()].is_none() {
                    dist[n.index()] = Some(d + 1);
                    frontier.push_back(n);
                }
            }
        }
        dist
    }
}

/// Build the connectivity graph of one posture.
///
/// An edge exists iff its success probability is strictly greater than
/// `threshold`; each edge carries its probability and exact reciprocal ETX.
pub fn connectivity_graph(
    table: &ChannelTable,
    topology: &BodyTopology,
    posture: PostureId,
    budget: &RadioBudget,
    threshold: f64,
) -> Result<ConnectivityGraph> {
    let mut edges = Vec::new();
    let mut neighbors = vec![Vec::new(); topology.len()];
    for (a, b) in topology.pairs() {
        let stats = table.stats(posture, a, b).ok_or_else(|| {
            Error::config(format!(
                "channel table is missing pair {{{a},{b}}} for posture {posture}"
            ))
        })?;
        let p = link_success_probability(stats, budget);
        if p > threshold {
            let etx = 1.0 / p;
            edges.push(GraphEdge {
                a,
                b,
                probability: p,
                etx,
            });
            neighbors[a.index()].push(b);
            neighbors[b.index()].push(a);
        }
    }
    for list in &mut neighbors {
        list.sort_unstable();
    }
    Ok(ConnectivityGraph {
        posture,
        node_count: topology.len(),
        edges,
        neighbors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p1() -> PostureId {
        PostureId::new(1).unwrap()
    }

    #[test]
    fn cdf_at_mean_is_half() {
        assert!((gaussian_cdf(40.0, 40.0, 5.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cdf_one_sigma_above_mean() {
        // Phi(1) from the standard normal table.
        let expected = 0.841_344_746_068_542_9;
        assert!((gaussian_cdf(40.0, 30.0, 10.0) - expected).abs() < 1e-12);
    }

    #[test]
    fn cdf_degenerate_stddev_is_a_step() {
        assert_eq!(gaussian_cdf(39.0, 40.0, 0.0), 0.0);
        assert_eq!(gaussian_cdf(41.0, 40.0, 0.0), 1.0);
        assert_eq!(gaussian_cdf(40.0, 40.0, 0.0), 0.5);
    }

    #[test]
    fn cdf_monotone_in_x() {
        let mut prev = 0.0;
        for i in 0..=200 {
            let x = -10.0 + i as f64 * 0.5;
            let c = gaussian_cdf(x, 30.0, 10.0);
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn success_probability_uses_the_budget() {
        let budget = RadioBudget::default();
        assert_eq!(budget.max_attenuation_db(), 40.0);
        let stats = LinkStats::new(p1(), NodeId(0), NodeId(1), 40.0, 5.0).unwrap();
        assert!((link_success_probability(&stats, &budget) - 0.5).abs() < 1e-15);
        let stats = LinkStats::new(p1(), NodeId(0), NodeId(1), 30.0, 10.0).unwrap();
        let expected = 0.841_344_746_068_542_9;
        assert!((link_success_probability(&stats, &budget) - expected).abs() < 1e-12);
    }

    #[test]
    fn etx_is_the_reciprocal() {
        assert_eq!(expected_transmission_count(1.0).unwrap(), 1.0);
        assert_eq!(expected_transmission_count(0.5).unwrap(), 2.0);
        let etx = expected_transmission_count(0.841345).unwrap();
        assert!((etx - 1.18858).abs() < 1e-5);
        assert!(matches!(
            expected_transmission_count(0.0),
            Err(Error::UnusableLink)
        ));
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let stats = LinkStats::new(p1(), NodeId(0), NodeId(1), 35.0, 6.0).unwrap();
        let mut r1 = ChaCha8Rng::seed_from_u64(7);
        let mut r2 = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..32 {
            assert_eq!(sample_attenuation(&stats, &mut r1), sample_attenuation(&stats, &mut r2));
        }
    }

    #[test]
    fn degenerate_sampling_returns_the_mean() {
        let stats = LinkStats::new(p1(), NodeId(0), NodeId(1), 35.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_attenuation(&stats, &mut rng), 35.0);
    }

    #[test]
    fn empirical_mean_of_draws_matches() {
        let stats = LinkStats::new(p1(), NodeId(0), NodeId(1), 35.0, 6.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let sum: f64 = (0..n).map(|_| sample_attenuation(&stats, &mut rng)).sum();
        let mean = sum / n as f64;
        let bound = 3.0 * stats.stddev_db / (n as f64).sqrt();
        assert!(
            (mean - stats.mean_db).abs() < bound,
            "empirical mean {mean} vs {} (bound {bound})",
            stats.mean_db
        );
    }

    #[test]
    fn empirical_success_frequency_matches_probability() {
        let budget = RadioBudget::default();
        let stats = LinkStats::new(p1(), NodeId(0), NodeId(1), 36.0, 5.0).unwrap();
        let p = link_success_probability(&stats, &budget);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 100_000;
        let successes = (0..n)
            .filter(|_| sample_attenuation(&stats, &mut rng) <= budget.max_attenuation_db())
            .count();
        let freq = successes as f64 / n as f64;
        let bound = 4.0 * (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() < bound, "freq {freq} vs p {p} (bound {bound})");
    }

    fn uniform_table(mean: f64, sd: f64) -> (ChannelTable, BodyTopology) {
        let topo = BodyTopology::body_default();
        let mut table = ChannelTable::new();
        for posture in PostureId::ALL {
            for (a, b) in topo.pairs() {
                table
                    .insert(LinkStats::new(posture, a, b, mean, sd).unwrap())
                    .unwrap();
            }
        }
        (table, topo)
    }

    #[test]
    fn graph_thresholds_are_strict() {
        // p = 0.009 and p = 0.02 around the 0.01 threshold.
        let topo = BodyTopology::new(vec!["s".into(), "a".into()], NodeId(0)).unwrap();
        let budget = RadioBudget::default();
        // Find means giving the target probabilities with sd = 5.
        // Phi(z) = p  =>  mean = 40 - 5 z.
        let mean_for = |p: f64| {
            // bisection on the cdf; plenty for a test
            let (mut lo, mut hi) = (-50.0, 200.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if gaussian_cdf(40.0, mid, 5.0) > p {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        for (p, expect_edge) in [(0.009, false), (0.02, true)] {
            let mut table = ChannelTable::new();
            for posture in PostureId::ALL {
                table
                    .insert(LinkStats::new(posture, NodeId(0), NodeId(1), mean_for(p), 5.0).unwrap())
                    .unwrap();
            }
            let g = connectivity_graph(&table, &topo, p1(), &budget, DEFAULT_PROBABILITY_THRESHOLD)
                .unwrap();
            assert_eq!(!g.edges().is_empty(), expect_edge, "p = {p}");
            if expect_edge {
                let e = g.edge(NodeId(0), NodeId(1)).unwrap();
                assert!((e.etx - 1.0 / e.probability).abs() < 1e-12);
                assert!((e.probability - 0.02).abs() < 1e-6);
                assert!((e.etx - 50.0).abs() < 2e-2);
            }
        }
    }

    #[test]
    fn lossless_table_gives_complete_graph() {
        let (table, topo) = uniform_table(10.0, 1.0); // far below the 40 dB budget
        let g = connectivity_graph(&table, &topo, p1(), &RadioBudget::default(), 0.01).unwrap();
        assert_eq!(g.edges().len(), 21);
        assert!(g.edges().iter().all(|e| (e.etx - 1.0).abs() < 1e-12));
    }

    #[test]
    fn graph_construction_is_deterministic() {
        let (table, topo) = uniform_table(38.0, 4.0);
        let budget = RadioBudget::default();
        let g1 = connectivity_graph(&table, &topo, p1(), &budget, 0.01).unwrap();
        let g2 = connectivity_graph(&table, &topo, p1(), &budget, 0.01).unwrap();
        assert_eq!(g1.edges(), g2.edges());
    }

    #[test]
    fn csv_round_trips() {
        let csv = "posture,node_a,node_b,mean_db,stddev_db\n1,0,1,25.0,6.0\n";
        let table = ChannelTable::parse_csv(csv).unwrap();
        let s = table.stats(p1(), NodeId(0), NodeId(1)).unwrap();
        assert_eq!(s.mean_db, 25.0);
        assert_eq!(s.stddev_db, 6.0);
        // Reversed order resolves to the same unordered pair.
        assert!(table.stats(p1(), NodeId(1), NodeId(0)).is_some());
    }

    #[test]
    fn csv_rejects_malformed_rows() {
        let bad = [
            "posture,node_a,node_b,mean_db,stddev_db\n1,0,1,25.0\n",
            "posture,node_a,node_b,mean_db,stddev_db\n8,0,1,25.0,6.0\n",
            "posture,node_a,node_b,mean_db,stddev_db\n1,0,0,25.0,6.0\n",
            "posture,node_a,node_b,mean_db,stddev_db\n1,0,1,25.0,-1.0\n",
            "posture,node_a,node_b,mean_db,stddev_db\n1,0,1,25.0,6.0\n1,1,0,30.0,6.0\n",
            "wrong,header\n",
        ];
        for csv in bad {
            let err = ChannelTable::parse_csv(csv).unwrap_err();
            assert!(matches!(err, Error::Config(_)), "{csv:?} -> {err}");
        }
    }

    #[test]
    fn coverage_check_names_the_hole() {
        let (table, topo) = uniform_table(30.0, 5.0);
        table.validate_coverage(&topo).unwrap();

        let mut incomplete = ChannelTable::new();
        for s in table.entries() {
            if !(s.posture.id() == 3 && s.a == NodeId(2) && s.b == NodeId(5)) {
                incomplete.insert(*s).unwrap();
            }
        }
        let err = incomplete.validate_coverage(&topo).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("{2,5}") && msg.contains("posture 3"), "{msg}");
    }
}
