//! Deterministic discrete-event core.
//!
//! One run owns a clock, an event queue, the per-node radios and bounded
//! FIFO transmit queues, and a single seeded RNG stream. The MAC is
//! deliberately simple: one shared channel, no carrier sensing, no backoff.
//! A frame is resolved at its transmission end, per potential receiver:
//! a receiver that transmitted during the frame's airtime misses it
//! (half-duplex), any other overlapping transmission collides it, and
//! otherwise a fresh Gaussian attenuation draw decides survival against
//! the link budget.

pub mod frame;
pub mod trace;

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{sample_attenuation, ConnectivityGraph, LinkStats};
use crate::metrics::{LossReason, MetricsReport, PacketLedger};
use crate::reliability::{apply_policy, RetransmissionPolicy, TxSchedule};
use crate::time::SimTime;
use crate::topology::{BodyTopology, NodeId};

pub use frame::{ControlKind, Destination, FrameKind, Packet, QueueEntry, TxPlan};
pub use trace::{BurstRecord, DeliveryRecord, Trace, TxRecord};

use frame::node_bit;

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// MAC and budget parameters of one run.
#[derive(Debug, Clone, Copy)]
pub struct RunParams {
    /// Airtime of a data frame. Default 4.256 ms: a full 127-byte 802.15.4
    /// frame plus its 6-byte synchronisation header at 250 kb/s.
    pub data_airtime: SimTime,
    /// Airtime of control frames (requests, replies, beacons, probes, acks).
    pub control_airtime: SimTime,
    /// Bounded FIFO transmit queue capacity, in frames.
    pub queue_capacity: usize,
    /// Initial hop budget of generated packets.
    pub initial_ttl: u32,
    /// Upper bound of the random medium-access delay drawn before every
    /// transmission start. Not carrier sensing and not contention-reactive
    /// backoff; it keeps independent nodes from phase-locking onto the same
    /// deterministic transmission grid (colliding retry cycles would
    /// otherwise re-collide forever). Spanning roughly one data airtime lets
    /// coupled senders drift apart within a round or two.
    pub access_jitter_max: SimTime,
    /// Link budget: maximum attenuation a frame survives, in dB.
    pub max_attenuation_db: f64,
    /// Retransmission policy applied to data frames.
    pub policy: RetransmissionPolicy,
    pub proto: ProtocolParams,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            data_airtime: SimTime::from_secs_f64(0.004256),
            control_airtime: SimTime::from_secs_f64(0.0005),
            queue_capacity: 64,
            initial_ttl: 14,
            access_jitter_max: SimTime::from_secs_f64(0.005),
            max_attenuation_db: 40.0,
            policy: RetransmissionPolicy::None,
            proto: ProtocolParams::default(),
        }
    }
}

/// Strategy-level timing and tuning knobs.
#[derive(Debug, Clone, Copy)]
pub struct ProtocolParams {
    /// How long an attenuation-negotiating node collects replies.
    pub request_timeout: SimTime,
    pub beacon_period: SimTime,
    /// EWMA weight of a new beacon-reception sample.
    pub ewma_alpha: f64,
    /// Beacon-reception window, in beacon periods.
    pub beacon_window: u32,
    /// Length of the initial probing phase.
    pub probing_duration: SimTime,
    pub reprobe_interval: SimTime,
    /// Upper bound of the random delay before answering or relaying probes.
    pub probe_jitter_max: SimTime,
    /// Initial gossip forwarding probability.
    pub gossip_initial_prob: f64,
    /// Retries and timeout of the conventional ACK policy.
    pub ack_max_retries: u32,
    pub ack_timeout: SimTime,
    /// Upper bound of the random delay before answering a Request. Without
    /// carrier sensing, simultaneous replies from every receiver of one
    /// broadcast would collide on every attempt; the jitter spreads them.
    pub reply_jitter_max: SimTime,
    /// Upper bound of the random delay before acking an anycast data frame
    /// (several forwarder-set members may ack the same broadcast).
    pub ack_jitter_max: SimTime,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams {
            request_timeout: SimTime::from_secs_f64(0.05),
            beacon_period: SimTime::from_secs_f64(1.0),
            ewma_alpha: 0.1,
            beacon_window: 10,
            probing_duration: SimTime::from_secs_f64(2.0),
            reprobe_interval: SimTime::from_secs_f64(0.5),
            probe_jitter_max: SimTime::from_secs_f64(0.1),
            gossip_initial_prob: 1.0,
            ack_max_retries: 3,
            ack_timeout: SimTime::from_secs_f64(0.02),
            reply_jitter_max: SimTime::from_secs_f64(0.02),
            ack_jitter_max: SimTime::from_secs_f64(0.006),
        }
    }
}

// ---------------------------------------------------------------------------
// Events
// ---------------------------------------------------------------------------

/// Timers owned by strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyTimer {
    RequestTimeout { req_id: u32 },
    Beacon,
    ProbeSend,
    ProbingEnd,
    Reprobe,
}

#[derive(Debug, Clone, Copy)]
enum EventBody {
    Generation { node: NodeId },
    TxStart { node: NodeId },
    TxEnd { txid: u64 },
    AckTimeout { node: NodeId, uid: u64, attempt: u32 },
    StrategyTimer { node: NodeId, timer: StrategyTimer },
    /// A deferred control enqueue (jittered replies and acks).
    ControlSend {
        node: NodeId,
        kind: FrameKind,
        dest: Destination,
    },
    SimEnd,
}

#[derive(Debug)]
struct Event {
    time: SimTime,
    seq: u64,
    body: EventBody,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

// ---------------------------------------------------------------------------
// Per-node runtime state
// ---------------------------------------------------------------------------

#[derive(Debug)]
struct NodeState {
    queue: VecDeque<QueueEntry>,
    radio_busy: bool,
    txstart_pending: bool,
    next_seq: u32,
    gen_interval: Option<SimTime>,
}

/// A transmission currently on the air.
#[derive(Debug, Clone, Copy)]
struct InFlight {
    txid: u64,
    node: NodeId,
    start: SimTime,
    end: SimTime,
    /// Nodes whose own transmissions overlapped this one.
    overlap_mask: u32,
}

/// Outcome of one frame at one potential receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RxOutcome {
    Delivered,
    AttenuationLoss,
    Collision,
    HalfDuplexMiss,
}

/// Per-frame reception outcome counters (diagnostics).
#[derive(Debug, Clone, Copy, Default)]
pub struct FrameOutcomes {
    pub delivered: u64,
    pub attenuation: u64,
    pub collision: u64,
    pub half_duplex: u64,
}

// ---------------------------------------------------------------------------
// Strategy interface
// ---------------------------------------------------------------------------

/// Reception metadata handed to strategies along with a data packet.
#[derive(Debug, Clone, Copy)]
pub struct RxMeta {
    /// Uid of the frame that carried the packet (for explicit acks).
    pub uid: u64,
    /// Whether the sender awaits an acknowledgment.
    pub wants_ack: bool,
}

/// How a strategy fans a packet out.
#[derive(Debug, Clone)]
pub enum FanOut {
    /// One unicast frame per listed target, in order.
    Unicasts(Vec<NodeId>),
    /// A single broadcast frame; `intended` scopes the ETX used for
    /// repeat planning and, under acks, who is expected to answer.
    Broadcast { intended: Intended },
}

#[derive(Debug, Clone)]
pub enum Intended {
    AllNeighbors,
    Set(Vec<NodeId>),
}

/// Which retransmission policy a forward uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyChoice {
    /// The scenario-configured policy.
    Scenario,
    /// Always the conventional ACK policy (CTP and ORW).
    ForceAck,
}

/// Event-driven convergecast strategy, one instance per node.
pub trait Strategy {
    fn on_init(&mut self, _ctx: &mut Ctx) {}
    /// A packet was generated at this node.
    fn on_generated(&mut self, ctx: &mut Ctx, packet: Packet);
    /// A data frame was received (never called at the sink).
    fn on_data(&mut self, ctx: &mut Ctx, packet: Packet, from: NodeId, rx: RxMeta);
    fn on_control(&mut self, _ctx: &mut Ctx, _kind: ControlKind, _from: NodeId) {}
    fn on_timer(&mut self, _ctx: &mut Ctx, _timer: StrategyTimer) {}
}

/// What a strategy sees and does; wraps the world for one node.
pub struct Ctx<'a> {
    world: &'a mut World,
    me: NodeId,
}

impl Ctx<'_> {
    pub fn now(&self) -> SimTime {
        self.world.now
    }

    pub fn me(&self) -> NodeId {
        self.me
    }

    pub fn sink(&self) -> NodeId {
        self.world.sink
    }

    pub fn neighbors(&self) -> Vec<NodeId> {
        self.world.graph.neighbors(self.me).to_vec()
    }

    pub fn link_etx(&self, to: NodeId) -> Option<f64> {
        self.world.graph.edge(self.me, to).map(|e| e.etx)
    }

    /// Mean attenuation of the link between this node and `to`.
    pub fn link_mean_db(&self, to: NodeId) -> Option<f64> {
        self.world.link_stats(self.me, to).map(|s| s.mean_db)
    }

    /// Mean attenuation of a node's best link strictly toward the sink
    /// (0 dB at the sink itself, `None` if the sink is unreachable).
    pub fn sinkward_min_mean(&self, node: NodeId) -> Option<f64> {
        self.world.sinkward_min_mean[node.index()]
    }

    pub fn hops_to_sink(&self, node: NodeId) -> Option<u32> {
        self.world.hops_to_sink[node.index()]
    }

    pub fn proto(&self) -> ProtocolParams {
        self.world.params.proto
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.world.rng
    }

    pub fn set_timer(&mut self, delay: SimTime, timer: StrategyTimer) {
        let at = self.world.now + delay;
        self.world.schedule(
            at,
            EventBody::StrategyTimer {
                node: self.me,
                timer,
            },
        );
    }

    pub fn send_control(&mut self, kind: ControlKind, dest: Destination) {
        self.world.enqueue_control(self.me, kind, dest);
    }

    /// Send a control frame after a uniform random delay in `[0, max_delay)`.
    pub fn send_control_jittered(&mut self, kind: ControlKind, dest: Destination, max_delay: SimTime) {
        let frame_kind = control_frame_kind(kind);
        self.world.schedule_control_send(self.me, frame_kind, dest, max_delay);
    }

    pub fn send_ack(&mut self, to: NodeId, acked_uid: u64) {
        self.world.enqueue_ack(self.me, to, acked_uid);
    }

    /// Ack after a uniform random delay (anycast acks from several members
    /// would otherwise all collide).
    pub fn send_ack_jittered(&mut self, to: NodeId, acked_uid: u64, max_delay: SimTime) {
        self.world.schedule_control_send(
            self.me,
            FrameKind::Ack { acked_uid },
            Destination::Unicast(to),
            max_delay,
        );
    }

    /// Forward a held packet copy: decrements its TTL, enqueues the frames,
    /// and consumes the copy. A zero TTL drops the packet instead; an empty
    /// target list discards it as a policy decision.
    pub fn forward_data(&mut self, packet: Packet, fanout: FanOut, choice: PolicyChoice) {
        self.world.forward_data(self.me, packet, fanout, choice);
    }

    /// Drop a held packet copy for the given reason.
    pub fn discard(&mut self, packet: Packet, reason: LossReason) {
        self.world.ledger.copy_lost(packet.id, reason);
    }
}

// ---------------------------------------------------------------------------
// World
// ---------------------------------------------------------------------------

/// Everything one run owns besides the strategy instances.
pub struct World {
    pub now: SimTime,
    duration: SimTime,
    ended: bool,
    events: BinaryHeap<Reverse<Event>>,
    next_ev_seq: u64,
    next_uid: u64,
    next_txid: u64,
    pub rng: ChaCha8Rng,
    nodes: Vec<NodeState>,
    in_flight: Vec<InFlight>,
    pub ledger: PacketLedger,
    pub transmissions: u64,
    /// Control frames dropped at full queues (no packet accounting).
    pub dropped_control: u64,
    pub frame_outcomes: FrameOutcomes,
    pub params: RunParams,
    graph: ConnectivityGraph,
    stats_matrix: Vec<Option<LinkStats>>,
    node_count: usize,
    sink: NodeId,
    hops_to_sink: Vec<Option<u32>>,
    sinkward_min_mean: Vec<Option<f64>>,
    trace: Option<Trace>,
}

/// Dispatches produced by frame resolution, delivered to strategies after
/// the engine's own bookkeeping for the frame is complete.
enum Dispatch {
    Data {
        to: NodeId,
        packet: Packet,
        from: NodeId,
        rx: RxMeta,
    },
    Control {
        to: NodeId,
        kind: ControlKind,
        from: NodeId,
    },
}

impl World {
    /// Assemble a run. Draws each source's generation phase from the seeded
    /// stream (node-id order), so two runs with one seed are identical.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        topology: &BodyTopology,
        graph: ConnectivityGraph,
        stats_matrix: Vec<Option<LinkStats>>,
        params: RunParams,
        rate_pps: f64,
        duration: SimTime,
        seed: u64,
        collect_trace: bool,
    ) -> World {
        let n = topology.len();
        debug_assert_eq!(stats_matrix.len(), n * n);
        let sink = topology.sink();
        let hops_to_sink = graph.hop_counts(sink);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let interval = SimTime(((1e9 / rate_pps).round() as u64).max(1));
        let mut nodes: Vec<NodeState> = (0..n)
            .map(|_| NodeState {
                queue: VecDeque::new(),
                radio_busy: false,
                txstart_pending: false,
                next_seq: 0,
                gen_interval: None,
            })
            .collect();
        for &s in topology.sources() {
            nodes[s.index()].gen_interval = Some(interval);
        }

        let sinkward_min_mean =
            sinkward_means(&graph, &hops_to_sink, &stats_matrix, n, sink);

        let mut world = World {
            now: SimTime::ZERO,
            duration,
            ended: false,
            events: BinaryHeap::new(),
            next_ev_seq: 0,
            next_uid: 0,
            next_txid: 0,
            rng: ChaCha8Rng::seed_from_u64(0), // replaced below
            nodes,
            in_flight: Vec::new(),
            ledger: PacketLedger::new(n),
            transmissions: 0,
            dropped_control: 0,
            frame_outcomes: FrameOutcomes::default(),
            params,
            graph,
            stats_matrix,
            node_count: n,
            sink,
            hops_to_sink,
            sinkward_min_mean,
            trace: collect_trace.then(|| Trace::new(n)),
        };

        // Per-source phase jitter in [0, interval), drawn in node-id order.
        for i in 0..n {
            if let Some(interval) = world.nodes[i].gen_interval {
                let u: f64 = rng.gen();
                let phase = SimTime((u * interval.ns() as f64).floor() as u64);
                if phase < duration {
                    world.schedule(phase, EventBody::Generation { node: NodeId(i as u8) });
                }
            }
        }
        world.schedule(duration, EventBody::SimEnd);
        world.rng = rng;
        world
    }

    pub fn sink(&self) -> NodeId {
        self.sink
    }

    pub fn graph(&self) -> &ConnectivityGraph {
        &self.graph
    }

    pub fn link_stats(&self, a: NodeId, b: NodeId) -> Option<&LinkStats> {
        self.stats_matrix[a.index() * self.node_count + b.index()].as_ref()
    }

    fn schedule(&mut self, at: SimTime, body: EventBody) {
        let seq = self.next_ev_seq;
        self.next_ev_seq += 1;
        self.events.push(Reverse(Event {
            time: at,
            seq,
            body,
        }));
    }

    fn pop_event(&mut self) -> Option<Event> {
        self.events.pop().map(|Reverse(e)| e)
    }

    // -- queueing ----------------------------------------------------------

    fn enqueue_control(&mut self, me: NodeId, kind: ControlKind, dest: Destination) {
        self.enqueue_raw_control(me, control_frame_kind(kind), dest);
    }

    fn schedule_control_send(
        &mut self,
        me: NodeId,
        kind: FrameKind,
        dest: Destination,
        max_delay: SimTime,
    ) {
        let u: f64 = self.rng.gen();
        let delay = SimTime((u * max_delay.ns() as f64).floor() as u64);
        let at = self.now + delay;
        self.schedule(at, EventBody::ControlSend { node: me, kind, dest });
    }

    fn enqueue_ack(&mut self, me: NodeId, to: NodeId, acked_uid: u64) {
        self.enqueue_raw_control(me, FrameKind::Ack { acked_uid }, Destination::Unicast(to));
    }

    fn enqueue_raw_control(&mut self, me: NodeId, kind: FrameKind, dest: Destination) {
        if self.nodes[me.index()].queue.len() >= self.params.queue_capacity {
            self.dropped_control += 1;
            return;
        }
        let uid = self.next_uid;
        self.next_uid += 1;
        let entry = QueueEntry {
            uid,
            kind,
            dest,
            wants_ack: false,
            plan: TxPlan::Repeat { left: 1, planned: 1 },
            airtime: self.params.control_airtime,
            delivered_mask: 0,
            any_delivery: false,
            acked: false,
            saw_collision: false,
            plan_etx: 1.0,
        };
        self.nodes[me.index()].queue.push_back(entry);
        self.service_queue(me);
    }

    fn forward_data(&mut self, me: NodeId, packet: Packet, fanout: FanOut, choice: PolicyChoice) {
        if packet.ttl == 0 {
            self.ledger.copy_lost(packet.id, LossReason::TtlExpired);
            return;
        }
        let child = Packet {
            ttl: packet.ttl - 1,
            hops: packet.hops + 1,
            ..packet
        };
        let policy = match choice {
            PolicyChoice::Scenario => self.params.policy,
            PolicyChoice::ForceAck => RetransmissionPolicy::AckBased {
                max_retries: self.params.proto.ack_max_retries,
                ack_timeout_s: self.params.proto.ack_timeout.as_secs_f64(),
            },
        };
        match fanout {
            FanOut::Unicasts(targets) => {
                if targets.is_empty() {
                    self.ledger.copy_lost(packet.id, LossReason::PolicyDiscard);
                    return;
                }
                for t in targets {
                    let etx = self
                        .graph
                        .edge(me, t)
                        .map(|e| e.etx)
                        .expect("forward target is a graph neighbor");
                    self.push_data(me, child, Destination::Unicast(t), policy, etx);
                }
                self.ledger.copy_consumed(packet.id);
            }
            FanOut::Broadcast { intended } => {
                let etx = self.broadcast_plan_etx(me, &intended);
                self.push_data(me, child, Destination::Broadcast, policy, etx);
                self.ledger.copy_consumed(packet.id);
            }
        }
    }

    /// ETX a broadcast is planned against: the maximum over the intended
    /// receivers that are actual neighbors (1 if none are).
    fn broadcast_plan_etx(&self, me: NodeId, intended: &Intended) -> f64 {
        let max = |targets: &mut dyn Iterator<Item = NodeId>| {
            targets
                .filter_map(|t| self.graph.edge(me, t).map(|e| e.etx))
                .fold(1.0f64, f64::max)
        };
        match intended {
            Intended::AllNeighbors => max(&mut self.graph.neighbors(me).iter().copied()),
            Intended::Set(set) => max(&mut set.iter().copied()),
        }
    }

    fn push_data(
        &mut self,
        me: NodeId,
        packet: Packet,
        dest: Destination,
        policy: RetransmissionPolicy,
        plan_etx: f64,
    ) {
        self.ledger.copy_created(packet.id);
        if self.nodes[me.index()].queue.len() >= self.params.queue_capacity {
            self.ledger.copy_lost(packet.id, LossReason::BufferOverflow);
            return;
        }
        let schedule = apply_policy(policy, plan_etx)
            .expect("channel-model ETX is always at least 1");
        let (plan, wants_ack) = match schedule {
            TxSchedule::Repeat(m) => (
                TxPlan::Repeat {
                    left: m,
                    planned: m,
                },
                false,
            ),
            TxSchedule::AwaitAck {
                max_retries,
                ack_timeout_s,
            } => (
                TxPlan::AckRetry {
                    attempts_done: 0,
                    max_attempts: max_retries + 1,
                    timeout: SimTime::from_secs_f64(ack_timeout_s),
                    awaiting: false,
                },
                true,
            ),
        };
        let uid = self.next_uid;
        self.next_uid += 1;
        let entry = QueueEntry {
            uid,
            kind: FrameKind::Data(packet),
            dest,
            wants_ack,
            plan,
            airtime: self.params.data_airtime,
            delivered_mask: 0,
            any_delivery: false,
            acked: false,
            saw_collision: false,
            plan_etx,
        };
        self.nodes[me.index()].queue.push_back(entry);
        self.service_queue(me);
    }

    // -- transmission ------------------------------------------------------

    fn service_queue(&mut self, node: NodeId) {
        if self.ended {
            return;
        }
        let n = &mut self.nodes[node.index()];
        if n.radio_busy || n.txstart_pending {
            return;
        }
        let Some(head) = n.queue.front() else { return };
        if let TxPlan::AckRetry { awaiting: true, .. } = head.plan {
            return;
        }
        n.txstart_pending = true;
        let u: f64 = self.rng.gen();
        let delay = SimTime((u * self.params.access_jitter_max.ns() as f64).floor() as u64);
        let at = self.now + delay;
        self.schedule(at, EventBody::TxStart { node });
    }

    fn start_transmission(&mut self, node: NodeId) {
        let idx = node.index();
        self.nodes[idx].txstart_pending = false;
        if self.ended || self.nodes[idx].radio_busy {
            return;
        }
        let (uid, airtime, is_data) = {
            let Some(head) = self.nodes[idx].queue.front() else {
                return;
            };
            if let TxPlan::AckRetry { awaiting: true, .. } = head.plan {
                return;
            }
            (head.uid, head.airtime, head.kind.is_data())
        };
        let txid = self.next_txid;
        self.next_txid += 1;
        let start = self.now;
        let end = start + airtime;
        self.transmissions += 1;

        // Mutual interference marking against everything still on the air.
        let my_bit = node_bit(node);
        let mut my_mask = 0u32;
        for f in &mut self.in_flight {
            if f.end > start && f.node != node {
                f.overlap_mask |= my_bit;
                my_mask |= node_bit(f.node);
            }
        }
        self.in_flight.push(InFlight {
            txid,
            node,
            start,
            end,
            overlap_mask: my_mask,
        });
        self.nodes[idx].radio_busy = true;
        if let Some(trace) = &mut self.trace {
            trace.transmissions.push(TxRecord {
                node,
                uid,
                start,
                end,
                is_data,
            });
            if is_data {
                trace.node_data_seq[idx].push(uid);
            }
        }
        self.schedule(end, EventBody::TxEnd { txid });
    }

    fn finish_transmission(&mut self, txid: u64) -> Vec<Dispatch> {
        let pos = self
            .in_flight
            .iter()
            .position(|f| f.txid == txid)
            .expect("TxEnd for an unknown transmission");
        let fl = self.in_flight.remove(pos);
        let me = fl.node;
        self.nodes[me.index()].radio_busy = false;

        let head = self.nodes[me.index()]
            .queue
            .front()
            .expect("transmitting node has a queue head")
            .clone();

        let receivers: Vec<NodeId> = match head.dest {
            Destination::Unicast(r) => {
                if self.graph.edge(me, r).is_some() {
                    vec![r]
                } else {
                    Vec::new()
                }
            }
            Destination::Broadcast => self.graph.neighbors(me).to_vec(),
        };

        let mut dispatches = Vec::new();
        for r in receivers {
            let outcome = self.resolve_reception(&fl, me, r);
            if head.delivered_mask & node_bit(r) != 0 {
                // An earlier transmission of this frame already served the
                // receiver. It still hears the duplicate and, where acks are
                // automatic (unicast receivers, the sink), re-acks it —
                // retries would otherwise never be confirmed. Broadcast
                // members ack through their strategy on first delivery only.
                if outcome == RxOutcome::Delivered
                    && head.wants_ack
                    && (matches!(head.dest, Destination::Unicast(_)) || r == self.sink)
                {
                    self.enqueue_ack(r, me, head.uid);
                }
                continue;
            }
            match outcome {
                RxOutcome::Delivered => {
                    self.frame_outcomes.delivered += 1;
                    {
                        let h = self.nodes[me.index()].queue.front_mut().unwrap();
                        h.delivered_mask |= node_bit(r);
                        h.any_delivery = true;
                    }
                    if let Some(trace) = &mut self.trace {
                        trace.deliveries.push(DeliveryRecord {
                            rx: r,
                            tx: me,
                            uid: head.uid,
                            packet: head.packet().map(|p| p.id),
                            frame_start: fl.start,
                            frame_end: fl.end,
                        });
                    }
                    match head.kind {
                        FrameKind::Data(pkt) => {
                            if r == self.sink {
                                self.ledger.record_delivery(pkt.id, self.now, pkt.hops);
                                if head.wants_ack {
                                    if matches!(head.dest, Destination::Unicast(_)) {
                                        self.enqueue_ack(r, me, head.uid);
                                    } else {
                                        // Anycast: other members may ack the
                                        // same frame, so stagger.
                                        let max = self.params.proto.ack_jitter_max;
                                        self.schedule_control_send(
                                            r,
                                            FrameKind::Ack {
                                                acked_uid: head.uid,
                                            },
                                            Destination::Unicast(me),
                                            max,
                                        );
                                    }
                                }
                            } else {
                                self.ledger.copy_created(pkt.id);
                                // Unicast acks are automatic (link-layer
                                // style); broadcast acks are up to the
                                // receiving strategy.
                                let unicast = matches!(head.dest, Destination::Unicast(_));
                                if head.wants_ack && unicast {
                                    self.enqueue_ack(r, me, head.uid);
                                }
                                dispatches.push(Dispatch::Data {
                                    to: r,
                                    packet: pkt,
                                    from: me,
                                    rx: RxMeta {
                                        uid: head.uid,
                                        wants_ack: head.wants_ack && !unicast,
                                    },
                                });
                            }
                        }
                        FrameKind::Ack { acked_uid } => self.handle_ack(r, acked_uid),
                        FrameKind::Request { req_id } => dispatches.push(Dispatch::Control {
                            to: r,
                            kind: ControlKind::Request { req_id },
                            from: me,
                        }),
                        FrameKind::Reply {
                            req_id,
                            to_sink_db,
                            to_source_db,
                        } => dispatches.push(Dispatch::Control {
                            to: r,
                            kind: ControlKind::Reply {
                                req_id,
                                to_sink_db,
                                to_source_db,
                            },
                            from: me,
                        }),
                        FrameKind::Beacon { cost } => dispatches.push(Dispatch::Control {
                            to: r,
                            kind: ControlKind::Beacon { cost },
                            from: me,
                        }),
                        FrameKind::Probe { cost } => dispatches.push(Dispatch::Control {
                            to: r,
                            kind: ControlKind::Probe { cost },
                            from: me,
                        }),
                    }
                }
                RxOutcome::AttenuationLoss => {
                    self.frame_outcomes.attenuation += 1;
                }
                RxOutcome::Collision => {
                    self.frame_outcomes.collision += 1;
                    self.nodes[me.index()].queue.front_mut().unwrap().saw_collision = true;
                }
                RxOutcome::HalfDuplexMiss => {
                    self.frame_outcomes.half_duplex += 1;
                    self.nodes[me.index()].queue.front_mut().unwrap().saw_collision = true;
                }
            }
        }

        // Plan bookkeeping for the entry itself.
        let plan = self.nodes[me.index()].queue.front().unwrap().plan;
        match plan {
            TxPlan::Repeat { left, planned } => {
                let left = left - 1;
                if left == 0 {
                    self.complete_head(me, planned);
                } else {
                    self.nodes[me.index()].queue.front_mut().unwrap().plan = TxPlan::Repeat {
                        left,
                        planned,
                    };
                }
                self.service_queue(me);
            }
            TxPlan::AckRetry {
                attempts_done,
                max_attempts,
                timeout,
                ..
            } => {
                let attempts_done = attempts_done + 1;
                if self.nodes[me.index()].queue.front().unwrap().acked {
                    // Acknowledged while this retry was on the air.
                    self.complete_head(me, attempts_done);
                    self.service_queue(me);
                    return dispatches;
                }
                self.nodes[me.index()].queue.front_mut().unwrap().plan = TxPlan::AckRetry {
                    attempts_done,
                    max_attempts,
                    timeout,
                    awaiting: true,
                };
                let uid = head.uid;
                let at = self.now + timeout;
                self.schedule(
                    at,
                    EventBody::AckTimeout {
                        node: me,
                        uid,
                        attempt: attempts_done,
                    },
                );
            }
        }
        dispatches
    }

    /// Resolve one frame at one potential receiver: half-duplex first, then
    /// collision, then an attenuation draw against the budget.
    fn resolve_reception(&mut self, fl: &InFlight, tx: NodeId, r: NodeId) -> RxOutcome {
        if fl.overlap_mask & node_bit(r) != 0 {
            return RxOutcome::HalfDuplexMiss;
        }
        if fl.overlap_mask != 0 {
            return RxOutcome::Collision;
        }
        let stats = *self
            .link_stats(tx, r)
            .expect("graph edge implies channel stats");
        let attenuation = sample_attenuation(&stats, &mut self.rng);
        if attenuation <= self.params.max_attenuation_db {
            RxOutcome::Delivered
        } else {
            RxOutcome::AttenuationLoss
        }
    }

    /// Pop the head entry, settling its packet accounting and tracing.
    fn complete_head(&mut self, node: NodeId, sent: u32) {
        let entry = self.nodes[node.index()]
            .queue
            .pop_front()
            .expect("completing an empty queue");
        if let FrameKind::Data(pkt) = entry.kind {
            if let (Some(trace), TxPlan::Repeat { planned, .. }) = (&mut self.trace, entry.plan) {
                trace.data_bursts.push(BurstRecord {
                    node,
                    uid: entry.uid,
                    packet: pkt.id,
                    source: pkt.source,
                    planned,
                    sent,
                    plan_etx: entry.plan_etx,
                });
            }
            if entry.any_delivery {
                self.ledger.copy_consumed(pkt.id);
            } else {
                self.ledger.copy_lost(pkt.id, entry.failure_reason());
            }
        }
    }

    fn handle_ack(&mut self, node: NodeId, acked_uid: u64) {
        let state = {
            let Some(head) = self.nodes[node.index()].queue.front() else {
                return;
            };
            if head.uid != acked_uid {
                return;
            }
            match head.plan {
                TxPlan::AckRetry {
                    attempts_done,
                    awaiting,
                    ..
                } => Some((attempts_done, awaiting)),
                _ => None,
            }
        };
        let Some((attempts_done, awaiting)) = state else {
            return;
        };
        if awaiting {
            // Idle between attempts: the entry completes right away.
            self.complete_head(node, attempts_done);
            self.service_queue(node);
        } else {
            // A retry is on the air; stop the cycle at its TxEnd.
            self.nodes[node.index()].queue.front_mut().unwrap().acked = true;
        }
    }

    fn on_ack_timeout(&mut self, node: NodeId, uid: u64, attempt: u32) {
        if self.ended {
            return;
        }
        let action = {
            let Some(head) = self.nodes[node.index()].queue.front() else {
                return;
            };
            if head.uid != uid {
                return; // stale timer
            }
            match head.plan {
                TxPlan::AckRetry {
                    attempts_done,
                    max_attempts,
                    awaiting: true,
                    ..
                } if attempts_done == attempt => attempts_done >= max_attempts,
                _ => return,
            }
        };
        if action {
            let sent = attempt;
            self.complete_head(node, sent);
        } else if let Some(head) = self.nodes[node.index()].queue.front_mut() {
            if let TxPlan::AckRetry { awaiting, .. } = &mut head.plan {
                *awaiting = false;
            }
        }
        self.service_queue(node);
    }

    fn generate_packet(&mut self, node: NodeId) -> Option<Packet> {
        let interval = self.nodes[node.index()].gen_interval?;
        self.nodes[node.index()].next_seq += 1;
        let seq = self.nodes[node.index()].next_seq;
        let id = self.ledger.on_generated(node, seq, self.now);
        let next = self.now + interval;
        if next < self.duration {
            self.schedule(next, EventBody::Generation { node });
        }
        Some(Packet {
            id,
            source: node,
            seq,
            created_at: self.now,
            ttl: self.params.initial_ttl,
            hops: 0,
        })
    }

    pub fn queue_len(&self, node: NodeId) -> usize {
        self.nodes[node.index()].queue.len()
    }
}

fn control_frame_kind(kind: ControlKind) -> FrameKind {
    match kind {
        ControlKind::Request { req_id } => FrameKind::Request { req_id },
        ControlKind::Reply {
            req_id,
            to_sink_db,
            to_source_db,
        } => FrameKind::Reply {
            req_id,
            to_sink_db,
            to_source_db,
        },
        ControlKind::Beacon { cost } => FrameKind::Beacon { cost },
        ControlKind::Probe { cost } => FrameKind::Probe { cost },
    }
}

/// Per-node mean attenuation of the best strictly-sink-ward link.
fn sinkward_means(
    graph: &ConnectivityGraph,
    hops: &[Option<u32>],
    stats: &[Option<LinkStats>],
    n: usize,
    sink: NodeId,
) -> Vec<Option<f64>> {
    (0..n)
        .map(|i| {
            let v = NodeId(i as u8);
            if v == sink {
                return Some(0.0);
            }
            let my_hops = hops[i]?;
            graph
                .neighbors(v)
                .iter()
                .filter(|&&u| hops[u.index()].is_some_and(|h| h < my_hops))
                .filter_map(|&u| stats[i * n + u.index()].map(|s| s.mean_db))
                .fold(None, |acc: Option<f64>, m| {
                    Some(acc.map_or(m, |a| a.min(m)))
                })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Simulation driver
// ---------------------------------------------------------------------------

/// One run: the world plus a strategy instance per node.
pub struct Simulation {
    world: World,
    strategies: Vec<Option<Box<dyn Strategy>>>,
}

impl Simulation {
    pub fn new(world: World, strategies: Vec<Box<dyn Strategy>>) -> Simulation {
        assert_eq!(world.node_count, strategies.len());
        Simulation {
            world,
            strategies: strategies.into_iter().map(Some).collect(),
        }
    }

    pub fn run(mut self) -> (MetricsReport, Option<Trace>) {
        for i in 0..self.strategies.len() {
            self.with_strategy(NodeId(i as u8), |s, ctx| s.on_init(ctx));
        }
        while let Some(ev) = self.world.pop_event() {
            debug_assert!(ev.time >= self.world.now, "event clock went backwards");
            self.world.now = ev.time;
            match ev.body {
                EventBody::SimEnd => {
                    self.world.ended = true;
                    break;
                }
                EventBody::Generation { node } => {
                    if let Some(packet) = self.world.generate_packet(node) {
                        self.with_strategy(node, |s, ctx| s.on_generated(ctx, packet));
                    }
                }
                EventBody::TxStart { node } => self.world.start_transmission(node),
                EventBody::TxEnd { txid } => {
                    let dispatches = self.world.finish_transmission(txid);
                    for d in dispatches {
                        match d {
                            Dispatch::Data {
                                to,
                                packet,
                                from,
                                rx,
                            } => self.with_strategy(to, |s, ctx| s.on_data(ctx, packet, from, rx)),
                            Dispatch::Control { to, kind, from } => {
                                self.with_strategy(to, |s, ctx| s.on_control(ctx, kind, from))
                            }
                        }
                    }
                }
                EventBody::AckTimeout {
                    node,
                    uid,
                    attempt,
                } => self.world.on_ack_timeout(node, uid, attempt),
                EventBody::ControlSend { node, kind, dest } => {
                    self.world.enqueue_raw_control(node, kind, dest);
                }
                EventBody::StrategyTimer { node, timer } => {
                    self.with_strategy(node, |s, ctx| s.on_timer(ctx, timer));
                }
            }
        }
        let transmissions = self.world.transmissions;
        let report = self.world.ledger.finalize(transmissions);
        (report, self.world.trace.take())
    }

    fn with_strategy(&mut self, node: NodeId, f: impl FnOnce(&mut dyn Strategy, &mut Ctx)) {
        let mut s = self.strategies[node.index()]
            .take()
            .expect("strategy dispatch is not reentrant");
        let mut ctx = Ctx {
            world: &mut self.world,
            me: node,
        };
        f(&mut *s, &mut ctx);
        self.strategies[node.index()] = Some(s);
    }
}

/// Build the flattened n x n link-stats matrix for one posture.
pub fn stats_matrix(
    table: &crate::channel::ChannelTable,
    topology: &BodyTopology,
    posture: crate::channel::PostureId,
) -> Vec<Option<LinkStats>> {
    let n = topology.len();
    let mut m = vec![None; n * n];
    for (a, b) in topology.pairs() {
        if let Some(s) = table.stats(posture, a, b) {
            m[a.index() * n + b.index()] = Some(*s);
            m[b.index() * n + a.index()] = Some(*s);
        }
    }
    m
}
