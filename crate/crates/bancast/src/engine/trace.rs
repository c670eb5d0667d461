//! Optional per-run trace for invariant checks.

use crate::metrics::PacketId;
use crate::time::SimTime;
use crate::topology::NodeId;

/// A completed repeat burst of one data frame.
#[derive(Debug, Clone, Copy)]
pub struct BurstRecord {
    pub node: NodeId,
    pub uid: u64,
    pub packet: PacketId,
    /// Origin of the carried packet.
    pub source: NodeId,
    /// Transmissions the plan called for (`ceil(link ETX)` under the
    /// No-ACK policy).
    pub planned: u32,
    pub sent: u32,
    pub plan_etx: f64,
}

/// One physical frame transmission.
#[derive(Debug, Clone, Copy)]
pub struct TxRecord {
    pub node: NodeId,
    pub uid: u64,
    pub start: SimTime,
    pub end: SimTime,
    pub is_data: bool,
}

/// One successful reception.
#[derive(Debug, Clone, Copy)]
pub struct DeliveryRecord {
    pub rx: NodeId,
    pub tx: NodeId,
    pub uid: u64,
    pub packet: Option<PacketId>,
    pub frame_start: SimTime,
    pub frame_end: SimTime,
}

/// Everything recorded when tracing is enabled.
#[derive(Debug, Default)]
pub struct Trace {
    pub data_bursts: Vec<BurstRecord>,
    pub transmissions: Vec<TxRecord>,
    pub deliveries: Vec<DeliveryRecord>,
    /// Per node, the uid of every data transmission in order.
    pub node_data_seq: Vec<Vec<u64>>,
}

impl Trace {
    pub fn new(node_count: usize) -> Self {
        Trace {
            node_data_seq: vec![Vec::new(); node_count],
            ..Trace::default()
        }
    }
}
