//! Forwarding along a precomputed minimum-ETX tree.
//!
//! Each node has exactly one parent; every packet walks the tree to the
//! sink as plain unicasts, one forward per packet per hop. Per-node FIFO
//! queues plus contiguous repeat bursts keep per-source deliveries in
//! sending order.

use crate::engine::{Ctx, FanOut, Packet, PolicyChoice, RxMeta, Strategy};
use crate::metrics::LossReason;
use crate::topology::NodeId;

pub struct PpvgForwarding {
    parent: Option<NodeId>,
}

impl PpvgForwarding {
    /// `parent` is `None` only at the sink.
    pub fn new(parent: Option<NodeId>) -> Self {
        PpvgForwarding { parent }
    }

    fn forward(&self, ctx: &mut Ctx, packet: Packet) {
        match self.parent {
            Some(p) => ctx.forward_data(packet, FanOut::Unicasts(vec![p]), PolicyChoice::Scenario),
            None => ctx.discard(packet, LossReason::PolicyDiscard),
        }
    }
}

impl Strategy for PpvgForwarding {
    fn on_generated(&mut self, ctx: &mut Ctx, packet: Packet) {
        self.forward(ctx, packet);
    }

    fn on_data(&mut self, ctx: &mut Ctx, packet: Packet, _from: NodeId, _rx: RxMeta) {
        self.forward(ctx, packet);
    }
}
