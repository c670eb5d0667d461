//! Frames, packets, and transmit-queue entries.

use crate::metrics::{LossReason, PacketId};
use crate::time::SimTime;
use crate::topology::NodeId;

/// One unit of convergecast traffic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Packet {
    /// Ledger handle of the generated packet.
    pub id: PacketId,
    pub source: NodeId,
    /// Per-source sequence number, starting at 1.
    pub seq: u32,
    pub created_at: SimTime,
    /// Remaining hop budget; decremented on every forward.
    pub ttl: u32,
    /// Hops travelled so far (`initial_ttl - ttl`).
    pub hops: u32,
}

/// Where a frame is aimed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Destination {
    Unicast(NodeId),
    Broadcast,
}

/// Payload of a frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrameKind {
    Data(Packet),
    /// Ask receivers for their estimated attenuation toward the sink.
    Request { req_id: u32 },
    /// Answer to a `Request`.
    Reply {
        req_id: u32,
        to_sink_db: f64,
        to_source_db: f64,
    },
    /// Routing-cost advertisement.
    Beacon { cost: f64 },
    /// Hop-cost probe; `None` solicits probes from neighbors (reprobe).
    Probe { cost: Option<u32> },
    /// Acknowledgment of the data frame with the given uid.
    Ack { acked_uid: u64 },
}

impl FrameKind {
    pub fn is_data(&self) -> bool {
        matches!(self, FrameKind::Data(_))
    }
}

/// Control payloads handed to strategies (acks stay inside the engine).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlKind {
    Request { req_id: u32 },
    Reply {
        req_id: u32,
        to_sink_db: f64,
        to_source_db: f64,
    },
    Beacon { cost: f64 },
    Probe { cost: Option<u32> },
}

/// Transmission plan of a queued frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxPlan {
    /// Send `left` more times, `planned` in total, back-to-back.
    Repeat { left: u32, planned: u32 },
    /// Stop-and-wait: transmit, await an ack, retry on timeout.
    AckRetry {
        attempts_done: u32,
        max_attempts: u32,
        timeout: SimTime,
        awaiting: bool,
    },
}

/// One entry of a node's bounded FIFO transmit queue.
#[derive(Debug, Clone)]
pub struct QueueEntry {
    pub uid: u64,
    pub kind: FrameKind,
    pub dest: Destination,
    pub wants_ack: bool,
    pub plan: TxPlan,
    pub airtime: SimTime,
    /// Receivers that already processed this frame; re-receptions of later
    /// repeats are re-acked but not re-delivered upward.
    pub delivered_mask: u32,
    pub any_delivery: bool,
    /// An ack arrived (possibly mid-retry); stop retrying at the next
    /// opportunity.
    pub acked: bool,
    /// Worst failure seen so far, for loss attribution.
    pub saw_collision: bool,
    /// ETX the plan was derived from (max over intended receivers for
    /// broadcasts); recorded in the trace.
    pub plan_etx: f64,
}

impl QueueEntry {
    pub fn packet(&self) -> Option<&Packet> {
        match &self.kind {
            FrameKind::Data(p) => Some(p),
            _ => None,
        }
    }

    /// Loss reason if this entry dies without any delivery.
    pub fn failure_reason(&self) -> LossReason {
        if self.saw_collision {
            LossReason::Collision
        } else {
            LossReason::Attenuation
        }
    }
}

pub fn node_bit(n: NodeId) -> u32 {
    1u32 << n.index()
}
