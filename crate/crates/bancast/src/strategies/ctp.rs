//! Collection-tree routing driven by periodic in-band beacons.
//!
//! Every node broadcasts a beacon carrying its path cost each period. A
//! receiver estimates the link ETX to the beacon's sender from its beacon
//! reception ratio over a trailing window (EWMA-smoothed) and re-picks the
//! parent minimising neighbor cost + link estimate. Data goes unicast to
//! the parent under the conventional ACK policy.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;

use crate::engine::{
    ControlKind, Ctx, Destination, FanOut, Packet, PolicyChoice, RxMeta, Strategy, StrategyTimer,
};
use crate::time::SimTime;
use crate::topology::NodeId;

pub struct Ctp {
    is_sink: bool,
    cost: f64,
    parent: Option<NodeId>,
    neighbor_cost: BTreeMap<NodeId, f64>,
    /// Reception timestamps of each neighbor's beacons, pruned to the window.
    beacon_seen: BTreeMap<NodeId, VecDeque<SimTime>>,
    link_est: BTreeMap<NodeId, f64>,
    pending: VecDeque<Packet>,
    started_at: SimTime,
}

impl Ctp {
    pub fn new(is_sink: bool) -> Self {
        Ctp {
            is_sink,
            cost: if is_sink { 0.0 } else { f64::INFINITY },
            parent: None,
            neighbor_cost: BTreeMap::new(),
            beacon_seen: BTreeMap::new(),
            link_est: BTreeMap::new(),
            pending: VecDeque::new(),
            started_at: SimTime::ZERO,
        }
    }

    fn update_link_estimate(&mut self, ctx: &Ctx, from: NodeId) {
        let period = ctx.proto().beacon_period;
        let window = ctx.proto().beacon_window as u64;
        let now = ctx.now();
        let seen = self.beacon_seen.entry(from).or_default();
        seen.push_back(now);
        let horizon = now.saturating_sub(SimTime(period.ns() * window));
        while seen.front().is_some_and(|&t| t < horizon) {
            seen.pop_front();
        }
        // Expected beacons inside the window from a perfect link, capped by
        // how long the run has even been going.
        let elapsed_periods = (now.saturating_sub(self.started_at).ns() / period.ns()) + 1;
        let expected = window.min(elapsed_periods).max(1);
        let ratio = (seen.len() as f64 / expected as f64).min(1.0);
        let sample = 1.0 / ratio;
        let alpha = ctx.proto().ewma_alpha;
        let est = match self.link_est.get(&from) {
            Some(&old) => (1.0 - alpha) * old + alpha * sample,
            None => sample,
        };
        self.link_est.insert(from, est);
    }

    fn recompute_route(&mut self) {
        if self.is_sink {
            return;
        }
        let mut best: Option<(f64, NodeId)> = None;
        for (&n, &est) in &self.link_est {
            let Some(&ncost) = self.neighbor_cost.get(&n) else {
                continue;
            };
            if !ncost.is_finite() {
                continue;
            }
            let total = ncost + est;
            let take = match best {
                None => true,
                Some((bcost, bid)) => total < bcost || (total == bcost && n < bid),
            };
            if take {
                best = Some((total, n));
            }
        }
        match best {
            Some((cost, parent)) => {
                self.cost = cost;
                self.parent = Some(parent);
            }
            None => {
                self.cost = f64::INFINITY;
                self.parent = None;
            }
        }
    }

    fn drain(&mut self, ctx: &mut Ctx) {
        let Some(parent) = self.parent else { return };
        while let Some(pkt) = self.pending.pop_front() {
            ctx.forward_data(pkt, FanOut::Unicasts(vec![parent]), PolicyChoice::ForceAck);
        }
    }

    fn take_packet(&mut self, ctx: &mut Ctx, packet: Packet) {
        self.pending.push_back(packet);
        self.drain(ctx);
    }
}

impl Strategy for Ctp {
    fn on_init(&mut self, ctx: &mut Ctx) {
        self.started_at = ctx.now();
        let period = ctx.proto().beacon_period;
        let jitter: f64 = ctx.rng().gen();
        let first = SimTime((jitter * period.ns() as f64).floor() as u64);
        ctx.set_timer(first, StrategyTimer::Beacon);
    }

    fn on_generated(&mut self, ctx: &mut Ctx, packet: Packet) {
        self.take_packet(ctx, packet);
    }

    fn on_data(&mut self, ctx: &mut Ctx, packet: Packet, _from: NodeId, _rx: RxMeta) {
        self.take_packet(ctx, packet);
    }

    fn on_control(&mut self, ctx: &mut Ctx, kind: ControlKind, from: NodeId) {
        let ControlKind::Beacon { cost } = kind else {
            return;
        };
        self.neighbor_cost.insert(from, cost);
        self.update_link_estimate(ctx, from);
        self.recompute_route();
        self.drain(ctx);
    }

    fn on_timer(&mut self, ctx: &mut Ctx, timer: StrategyTimer) {
        let StrategyTimer::Beacon = timer else { return };
        ctx.send_control(
            ControlKind::Beacon { cost: self.cost },
            Destination::Broadcast,
        );
        ctx.set_timer(ctx.proto().beacon_period, StrategyTimer::Beacon);
    }
}
