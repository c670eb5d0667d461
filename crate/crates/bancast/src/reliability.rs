//! Retransmission policies.
//!
//! The No-ACK policy transmits every data frame `ceil(ETX)` times
//! back-to-back without waiting for any acknowledgment; the conventional
//! ACK policy transmits once and retries on a timeout. Control frames never
//! repeat under either policy.

use crate::error::{Error, Result};

/// How data frames are retransmitted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RetransmissionPolicy {
    /// Every data frame is transmitted exactly once.
    None,
    /// Every data frame is transmitted `ceil(link ETX)` times consecutively,
    /// with no acknowledgments. Broadcasts use the maximum ETX over the
    /// intended receivers.
    NoAckEtxRepeat,
    /// Transmit, await an acknowledgment, retry on timeout.
    AckBased {
        max_retries: u32,
        ack_timeout_s: f64,
    },
}

impl RetransmissionPolicy {
    pub const DEFAULT_ACK: RetransmissionPolicy = RetransmissionPolicy::AckBased {
        max_retries: 3,
        ack_timeout_s: 0.02,
    };
}

/// Number of consecutive transmissions for one data frame on a link of the
/// given ETX: the ceiling, since transmissions are integral and rounding
/// down would undershoot the expected count.
pub fn repeat_count(etx: f64) -> Result<u32> {
    if etx.is_nan() || etx < 1.0 {
        return Err(Error::config(format!(
            "etx {etx} below 1 is impossible under the channel model"
        )));
    }
    Ok(etx.ceil() as u32)
}

/// Transmission schedule of one data frame under `policy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TxSchedule {
    /// Send the frame this many times back-to-back.
    Repeat(u32),
    /// Send once, then retry on ack timeout up to `max_retries` extra times.
    AwaitAck { max_retries: u32, ack_timeout_s: f64 },
}

/// Resolve the schedule for a data frame whose (maximum) link ETX is known.
pub fn apply_policy(policy: RetransmissionPolicy, link_etx: f64) -> Result<TxSchedule> {
    Ok(match policy {
        RetransmissionPolicy::None => TxSchedule::Repeat(1),
        RetransmissionPolicy::NoAckEtxRepeat => TxSchedule::Repeat(repeat_count(link_etx)?),
        RetransmissionPolicy::AckBased {
            max_retries,
            ack_timeout_s,
        } => TxSchedule::AwaitAck {
            max_retries,
            ack_timeout_s,
        },
    })
}
