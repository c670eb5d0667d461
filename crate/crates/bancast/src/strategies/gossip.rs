//! Gossip strategies: flooding, probabilistic flooding, and random walks.
//!
//! Every variant suppresses duplicates — a node forwards a given packet at
//! most once — and the TTL bounds the spread.

use std::collections::HashSet;

use rand::Rng;

use crate::engine::{Ctx, FanOut, Intended, Packet, PolicyChoice, RxMeta, Strategy};
use crate::metrics::{LossReason, PacketId};
use crate::topology::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GossipKind {
    /// Broadcast every fresh packet to all neighbors.
    FloodToSink,
    /// Broadcast with a probability that halves on every forward of the
    /// packet: `p0 * 2^-k` after `k` hops.
    ProbaCvg,
    /// Unicast to one uniformly random neighbor.
    PrunedCvg,
}

/// What a gossip node does with a fresh in-budget packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GossipAction {
    Broadcast,
    /// Index into the neighbor list.
    Unicast(usize),
    Decline,
}

/// Pure forwarding decision. `hops` is how many times the packet has been
/// forwarded already, so the ProbaCvg probability is exactly `p0 * 2^-hops`.
pub fn gossip_decision<R: Rng + ?Sized>(
    kind: GossipKind,
    hops: u32,
    initial_prob: f64,
    neighbor_count: usize,
    rng: &mut R,
) -> GossipAction {
    match kind {
        GossipKind::FloodToSink => GossipAction::Broadcast,
        GossipKind::ProbaCvg => {
            let p = initial_prob * 0.5f64.powi(hops as i32);
            if rng.gen::<f64>() < p {
                GossipAction::Broadcast
            } else {
                GossipAction::Decline
            }
        }
        GossipKind::PrunedCvg => {
            if neighbor_count == 0 {
                GossipAction::Decline
            } else {
                GossipAction::Unicast(rng.gen_range(0..neighbor_count))
            }
        }
    }
}

pub struct Gossip {
    kind: GossipKind,
    seen: HashSet<PacketId>,
}

impl Gossip {
    pub fn new(kind: GossipKind) -> Self {
        Gossip {
            kind,
            seen: HashSet::new(),
        }
    }

    fn handle(&mut self, ctx: &mut Ctx, packet: Packet) {
        if packet.ttl == 0 {
            ctx.discard(packet, LossReason::TtlExpired);
            return;
        }
        let neighbors = ctx.neighbors();
        let p0 = ctx.proto().gossip_initial_prob;
        match gossip_decision(self.kind, packet.hops, p0, neighbors.len(), ctx.rng()) {
            GossipAction::Broadcast => ctx.forward_data(
                packet,
                FanOut::Broadcast {
                    intended: Intended::AllNeighbors,
                },
                PolicyChoice::Scenario,
            ),
            GossipAction::Unicast(i) => ctx.forward_data(
                packet,
                FanOut::Unicasts(vec![neighbors[i]]),
                PolicyChoice::Scenario,
            ),
            GossipAction::Decline => ctx.discard(packet, LossReason::PolicyDiscard),
        }
    }
}

impl Strategy for Gossip {
    fn on_generated(&mut self, ctx: &mut Ctx, packet: Packet) {
        self.seen.insert(packet.id);
        self.handle(ctx, packet);
    }

    fn on_data(&mut self, ctx: &mut Ctx, packet: Packet, _from: NodeId, _rx: RxMeta) {
        if !self.seen.insert(packet.id) {
            ctx.discard(packet, LossReason::PolicyDiscard);
            return;
        }
        self.handle(ctx, packet);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flood_always_broadcasts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for hops in 0..5 {
            assert_eq!(
                gossip_decision(GossipKind::FloodToSink, hops, 1.0, 3, &mut rng),
                GossipAction::Broadcast
            );
        }
    }

    #[test]
    fn proba_first_hop_is_certain_then_halves() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        // Hop 0 at p0 = 1.0 always forwards.
        for _ in 0..100 {
            assert_eq!(
                gossip_decision(GossipKind::ProbaCvg, 0, 1.0, 3, &mut rng),
                GossipAction::Broadcast
            );
        }
        // After k = 2 forwards the probability is 1/4.
        let n = 40_000;
        let forwarded = (0..n)
            .filter(|_| {
                gossip_decision(GossipKind::ProbaCvg, 2, 1.0, 3, &mut rng)
                    == GossipAction::Broadcast
            })
            .count();
        let freq = forwarded as f64 / n as f64;
        assert!((freq - 0.25).abs() < 0.01, "freq {freq}");
    }

    #[test]
    fn pruned_picks_one_neighbor_uniformly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = [0u32; 2];
        for _ in 0..2000 {
            match gossip_decision(GossipKind::PrunedCvg, 1, 1.0, 2, &mut rng) {
                GossipAction::Unicast(i) => counts[i] += 1,
                other => panic!("unexpected {other:?}"),
            }
        }
        assert!(counts[0] > 800 && counts[1] > 800, "{counts:?}");
        assert_eq!(
            gossip_decision(GossipKind::PrunedCvg, 1, 1.0, 0, &mut rng),
            GossipAction::Decline
        );
    }
}
