//! Opportunistic anycast over a probed hop-cost gradient.
//!
//! An initial probing phase floods hop costs outward from the sink; nodes
//! that stay without a cost (or without any lower-cost neighbor) keep
//! soliciting with reprobes. After the phase, data is broadcast to the
//! forwarder set — every strictly-lower-cost neighbor — under the ACK
//! policy: any member's ack stops the retries, and members forward each
//! packet at most once.

use std::collections::{BTreeMap, HashSet, VecDeque};

use rand::Rng;

use crate::engine::{
    ControlKind, Ctx, Destination, FanOut, Intended, Packet, PolicyChoice, RxMeta, Strategy,
    StrategyTimer,
};
use crate::metrics::{LossReason, PacketId};
use crate::time::SimTime;
use crate::topology::NodeId;

pub struct Orw {
    is_sink: bool,
    cost: Option<u32>,
    neighbor_cost: BTreeMap<NodeId, u32>,
    forwarders: Vec<NodeId>,
    probing_done: bool,
    probe_scheduled: bool,
    deadline: SimTime,
    seen: HashSet<PacketId>,
    pending: VecDeque<Packet>,
}

impl Orw {
    pub fn new(is_sink: bool) -> Self {
        Orw {
            is_sink,
            cost: is_sink.then_some(0),
            neighbor_cost: BTreeMap::new(),
            forwarders: Vec::new(),
            probing_done: false,
            probe_scheduled: false,
            deadline: SimTime::ZERO,
            seen: HashSet::new(),
            pending: VecDeque::new(),
        }
    }

    fn jittered_reprobe_delay(ctx: &mut Ctx) -> SimTime {
        let base = ctx.proto().reprobe_interval;
        let max = ctx.proto().probe_jitter_max;
        let u: f64 = ctx.rng().gen();
        base + SimTime((u * max.ns() as f64).floor() as u64)
    }

    fn schedule_probe(&mut self, ctx: &mut Ctx) {
        if self.probe_scheduled || self.cost.is_none() {
            return;
        }
        self.probe_scheduled = true;
        let max = ctx.proto().probe_jitter_max;
        let u: f64 = ctx.rng().gen();
        let delay = SimTime((u * max.ns() as f64).floor() as u64);
        ctx.set_timer(delay, StrategyTimer::ProbeSend);
    }

    fn recompute_forwarders(&mut self) {
        let Some(mine) = self.cost else {
            self.forwarders.clear();
            return;
        };
        self.forwarders = self
            .neighbor_cost
            .iter()
            .filter(|&(_, &c)| c < mine)
            .map(|(&n, _)| n)
            .collect();
    }

    /// Close probing if a usable forwarder set exists.
    fn try_finish(&mut self, ctx: &mut Ctx) {
        if self.probing_done || self.is_sink || ctx.now() < self.deadline {
            return;
        }
        self.recompute_forwarders();
        if !self.forwarders.is_empty() {
            self.probing_done = true;
            self.drain(ctx);
        }
    }

    fn drain(&mut self, ctx: &mut Ctx) {
        while let Some(pkt) = self.pending.pop_front() {
            self.forward(ctx, pkt);
        }
    }

    fn forward(&mut self, ctx: &mut Ctx, packet: Packet) {
        ctx.forward_data(
            packet,
            FanOut::Broadcast {
                intended: Intended::Set(self.forwarders.clone()),
            },
            PolicyChoice::ForceAck,
        );
    }

    fn take_packet(&mut self, ctx: &mut Ctx, packet: Packet) {
        if self.probing_done && !self.forwarders.is_empty() {
            self.forward(ctx, packet);
        } else {
            self.pending.push_back(packet);
        }
    }
}

impl Strategy for Orw {
    fn on_init(&mut self, ctx: &mut Ctx) {
        self.deadline = ctx.proto().probing_duration;
        if self.is_sink {
            self.schedule_probe(ctx);
        } else {
            ctx.set_timer(ctx.proto().probing_duration, StrategyTimer::ProbingEnd);
            let delay = Self::jittered_reprobe_delay(ctx);
            ctx.set_timer(delay, StrategyTimer::Reprobe);
        }
    }

    fn on_generated(&mut self, ctx: &mut Ctx, packet: Packet) {
        self.seen.insert(packet.id);
        self.take_packet(ctx, packet);
    }

    fn on_data(&mut self, ctx: &mut Ctx, packet: Packet, from: NodeId, rx: RxMeta) {
        // Forwarder-set membership from the receiver's view: strictly lower
        // cost than the sender.
        let member = match (self.cost, self.neighbor_cost.get(&from)) {
            (Some(mine), Some(&theirs)) => mine < theirs,
            _ => false,
        };
        if !member {
            ctx.discard(packet, LossReason::PolicyDiscard);
            return;
        }
        if rx.wants_ack {
            let jitter = ctx.proto().ack_jitter_max;
            ctx.send_ack_jittered(from, rx.uid, jitter);
        }
        if self.seen.contains(&packet.id) {
            ctx.discard(packet, LossReason::PolicyDiscard);
            return;
        }
        self.seen.insert(packet.id);
        self.take_packet(ctx, packet);
    }

    fn on_control(&mut self, ctx: &mut Ctx, kind: ControlKind, from: NodeId) {
        let ControlKind::Probe { cost } = kind else {
            return;
        };
        match cost {
            Some(c) => {
                let entry = self.neighbor_cost.entry(from).or_insert(c);
                *entry = (*entry).min(c);
                let better = self.cost.is_none_or(|mine| c + 1 < mine);
                if !self.is_sink && better {
                    self.cost = Some(c + 1);
                    self.schedule_probe(ctx);
                }
                self.try_finish(ctx);
            }
            None => {
                // A reprobe solicitation: advertise our cost if we have one.
                self.schedule_probe(ctx);
            }
        }
    }

    fn on_timer(&mut self, ctx: &mut Ctx, timer: StrategyTimer) {
        match timer {
            StrategyTimer::ProbeSend => {
                self.probe_scheduled = false;
                if let Some(c) = self.cost {
                    ctx.send_control(
                        ControlKind::Probe { cost: Some(c) },
                        Destination::Broadcast,
                    );
                }
            }
            StrategyTimer::ProbingEnd => self.try_finish(ctx),
            StrategyTimer::Reprobe => {
                if !self.probing_done {
                    self.try_finish(ctx);
                }
                if !self.probing_done {
                    ctx.send_control(ControlKind::Probe { cost: None }, Destination::Broadcast);
                    let delay = Self::jittered_reprobe_delay(ctx);
                    ctx.set_timer(delay, StrategyTimer::Reprobe);
                }
            }
            _ => {}
        }
    }
}
