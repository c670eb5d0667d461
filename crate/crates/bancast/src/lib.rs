//! Deterministic discrete-event simulation of multi-hop convergecast in
//! wireless body-area networks.
//!
//! The channel is posture-centric: every link carries per-posture Gaussian
//! attenuation statistics, a transmission survives iff its fresh attenuation
//! draw stays within the link budget, and the reciprocal of that survival
//! probability is the link's expected transmission count (ETX). On top of
//! the channel sit fourteen convergecast strategies (multi-paths,
//! attenuation negotiation, beacon- and probe-driven dynamic routing,
//! gossip, and per-posture minimum-ETX trees), two retransmission policies
//! (No-ACK ETX repeats and conventional acks), and a metrics layer that
//! reports reception rate, per-source delivery order, transmission counts,
//! and delays.
//!
//! Runs are exactly reproducible: one seed fully determines the event trace,
//! so every CSV a sweep emits is byte-identical across executions.
//!
//! The `examples/` directory demonstrates each capability; the `bancast`
//! binary wraps the same library behind `run`, `sweep`, `ppvg-trees`,
//! `etx-table`, and `validate` subcommands.

pub mod channel;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod ppvg;
pub mod reliability;
pub mod scenario;
pub mod strategies;
pub mod sweep;
pub mod time;
pub mod topology;

pub use channel::{
    connectivity_graph, expected_transmission_count, gaussian_cdf, link_success_probability,
    sample_attenuation, ChannelTable, ConnectivityGraph, LinkStats, PostureId, RadioBudget,
};
pub use error::{Error, Result};
pub use metrics::MetricsReport;
pub use ppvg::{build_ppvg_tree, ppvg_trees_all_postures, PpvgTree};
pub use reliability::{repeat_count, RetransmissionPolicy};
pub use scenario::Scenario;
pub use strategies::StrategyKind;
pub use time::SimTime;
pub use topology::{BodyTopology, NodeId};
