//! Multi-paths strategies over a predetermined parent overlay.
//!
//! The four variants differ only in whether the origin and the relays send
//! to all their parents or to one parent picked uniformly at random.

use rand::Rng;

use crate::engine::{Ctx, FanOut, Packet, PolicyChoice, RxMeta, Strategy};
use crate::topology::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultipathKind {
    /// All parents at the origin, all parents at relays.
    Apap,
    /// All parents at the origin, one random parent at relays.
    Appp,
    /// One random parent at the origin, all parents at relays.
    Ppap,
    /// One random parent everywhere.
    Pppp,
}

/// Next hops of one forward under the given variant.
pub fn multipath_next_hops<R: Rng + ?Sized>(
    kind: MultipathKind,
    is_origin: bool,
    parents: &[NodeId],
    rng: &mut R,
) -> Vec<NodeId> {
    debug_assert!(!parents.is_empty());
    let all = |parents: &[NodeId]| parents.to_vec();
    let one = |parents: &[NodeId], rng: &mut R| vec![parents[rng.gen_range(0..parents.len())]];
    match (kind, is_origin) {
        (MultipathKind::Apap, _) => all(parents),
        (MultipathKind::Appp, true) => all(parents),
        (MultipathKind::Appp, false) => one(parents, rng),
        (MultipathKind::Ppap, true) => one(parents, rng),
        (MultipathKind::Ppap, false) => all(parents),
        (MultipathKind::Pppp, _) => one(parents, rng),
    }
}

pub struct Multipath {
    kind: MultipathKind,
    parents: Vec<NodeId>,
}

impl Multipath {
    pub fn new(kind: MultipathKind, parents: Vec<NodeId>) -> Self {
        Multipath { kind, parents }
    }

    fn forward(&mut self, ctx: &mut Ctx, packet: Packet, is_origin: bool) {
        let hops = multipath_next_hops(self.kind, is_origin, &self.parents, ctx.rng());
        ctx.forward_data(packet, FanOut::Unicasts(hops), PolicyChoice::Scenario);
    }
}

impl Strategy for Multipath {
    fn on_generated(&mut self, ctx: &mut Ctx, packet: Packet) {
        self.forward(ctx, packet, true);
    }

    fn on_data(&mut self, ctx: &mut Ctx, packet: Packet, _from: NodeId, _rx: RxMeta) {
        self.forward(ctx, packet, false);
    }
}
