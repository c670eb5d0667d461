//! Scenario configuration files.
//!
//! A config is a flat TOML file with `[topology]`, `[channel]`, `[mac]`,
//! `[protocol]`, `[strategy]`, `[run]`, and `[sweep]` sections; every field
//! has a default, so a minimal file only names the channel table. Paths are
//! resolved relative to the config file's directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::channel::{ChannelTable, PostureId, RadioBudget};
use crate::engine::{ProtocolParams, RunParams};
use crate::error::{Error, Result};
use crate::reliability::RetransmissionPolicy;
use crate::scenario::Scenario;
use crate::strategies::{ParentOverlay, StrategyKind};
use crate::sweep::SweepSpec;
use crate::time::SimTime;
use crate::topology::{BodyTopology, NodeId, BODY_LABELS};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    topology: TopologySection,
    channel: ChannelSection,
    #[serde(default)]
    mac: MacSection,
    #[serde(default)]
    protocol: ProtocolSection,
    #[serde(default)]
    strategy: StrategySection,
    #[serde(default)]
    run: RunSection,
    #[serde(default)]
    sweep: SweepSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
#[derive(Default)]
struct TopologySection {
    nodes: Option<u8>,
    labels: Option<Vec<String>>,
    sink: Option<u8>,
    sources: Option<Vec<u8>>,
}


#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelSection {
    table: PathBuf,
    threshold: Option<f64>,
    tx_power_dbm: Option<f64>,
    sensitivity_dbm: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MacSection {
    data_airtime_s: Option<f64>,
    control_airtime_s: Option<f64>,
    queue_capacity: Option<usize>,
    ttl: Option<u32>,
    access_jitter_max_s: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProtocolSection {
    request_timeout_s: Option<f64>,
    beacon_period_s: Option<f64>,
    ewma_alpha: Option<f64>,
    beacon_window: Option<u32>,
    probing_duration_s: Option<f64>,
    reprobe_interval_s: Option<f64>,
    probe_jitter_max_s: Option<f64>,
    gossip_initial_prob: Option<f64>,
    ack_max_retries: Option<u32>,
    ack_timeout_s: Option<f64>,
    reply_jitter_max_s: Option<f64>,
    ack_jitter_max_s: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct StrategySection {
    kind: Option<String>,
    retransmission: Option<String>,
    overlay: Option<Vec<OverlayEntry>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OverlayEntry {
    node: u8,
    parents: Vec<u8>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    posture: Option<u8>,
    rate_pps: Option<f64>,
    duration_s: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    postures: Option<Vec<u8>>,
    strategies: Option<Vec<String>>,
    rates_pps: Option<Vec<f64>>,
    seed_base: Option<u64>,
    seed_count: Option<u64>,
    seeds: Option<Vec<u64>>,
    duration_s: Option<f64>,
}

/// Default sweep grid: per-source rates from 1 to 500 packets per second.
pub const DEFAULT_RATE_GRID: [f64; 10] =
    [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 75.0, 100.0, 200.0, 500.0];

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut cfg: ConfigFile = toml::from_str(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        // Table path resolves relative to the config file.
        if cfg.channel.table.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.channel.table = dir.join(&cfg.channel.table);
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<ConfigFile> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn table_path(&self) -> &Path {
        &self.channel.table
    }

    pub fn topology(&self) -> Result<BodyTopology> {
        let sink = NodeId(self.topology.sink.unwrap_or(0));
        let labels: Vec<String> = match (&self.topology.labels, self.topology.nodes) {
            (Some(labels), nodes) => {
                if let Some(n) = nodes {
                    if labels.len() != n as usize {
                        return Err(Error::config(format!(
                            "topology declares {n} nodes but {} labels",
                            labels.len()
                        )));
                    }
                }
                labels.clone()
            }
            (None, Some(7)) | (None, None) => {
                BODY_LABELS.iter().map(|s| s.to_string()).collect()
            }
            (None, Some(n)) => (0..n).map(|i| format!("node{i}")).collect(),
        };
        let mut topo = BodyTopology::new(labels, sink)?;
        if let Some(sources) = &self.topology.sources {
            topo.set_sources(sources.iter().map(|&s| NodeId(s)).collect())?;
        }
        Ok(topo)
    }

    pub fn budget(&self) -> RadioBudget {
        let default = RadioBudget::default();
        RadioBudget::new(
            self.channel.tx_power_dbm.unwrap_or(default.tx_power_dbm),
            self.channel
                .sensitivity_dbm
                .unwrap_or(default.sensitivity_dbm),
        )
    }

    pub fn threshold(&self) -> f64 {
        self.channel
            .threshold
            .unwrap_or(crate::channel::DEFAULT_PROBABILITY_THRESHOLD)
    }

    fn run_params(&self) -> Result<RunParams> {
        let mut p = RunParams::default();
        if let Some(v) = self.mac.data_airtime_s {
            p.data_airtime = SimTime::from_secs_f64(v);
        }
        if let Some(v) = self.mac.control_airtime_s {
            p.control_airtime = SimTime::from_secs_f64(v);
        }
        if let Some(v) = self.mac.queue_capacity {
            p.queue_capacity = v;
        }
        if let Some(v) = self.mac.ttl {
            p.initial_ttl = v;
        }
        if let Some(v) = self.mac.access_jitter_max_s {
            p.access_jitter_max = SimTime::from_secs_f64(v);
        }
        let mut proto = ProtocolParams::default();
        let s = &self.protocol;
        if let Some(v) = s.request_timeout_s {
            proto.request_timeout = SimTime::from_secs_f64(v);
        }
        if let Some(v) = s.beacon_period_s {
            proto.beacon_period = SimTime::from_secs_f64(v);
        }
        if let Some(v) = s.ewma_alpha {
            proto.ewma_alpha = v;
        }
        if let Some(v) = s.beacon_window {
            proto.beacon_window = v;
        }
        if let Some(v) = s.probing_duration_s {
            proto.probing_duration = SimTime::from_secs_f64(v);
        }
        if let Some(v) = s.reprobe_interval_s {
            proto.reprobe_interval = SimTime::from_secs_f64(v);
        }
        if let Some(v) = s.probe_jitter_max_s {
            proto.probe_jitter_max = SimTime::from_secs_f64(v);
        }
        if let Some(v) = s.gossip_initial_prob {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(format!(
                    "gossip_initial_prob {v} must be within [0, 1]"
                )));
            }
            proto.gossip_initial_prob = v;
        }
        if let Some(v) = s.ack_max_retries {
            proto.ack_max_retries = v;
        }
        if let Some(v) = s.ack_timeout_s {
            proto.ack_timeout = SimTime::from_secs_f64(v);
        }
        if let Some(v) = s.reply_jitter_max_s {
            proto.reply_jitter_max = SimTime::from_secs_f64(v);
        }
        if let Some(v) = s.ack_jitter_max_s {
            proto.ack_jitter_max = SimTime::from_secs_f64(v);
        }
        p.proto = proto;
        p.policy = self.retransmission_policy(&proto)?;
        Ok(p)
    }

    fn retransmission_policy(&self, proto: &ProtocolParams) -> Result<RetransmissionPolicy> {
        Ok(
            match self
                .strategy
                .retransmission
                .as_deref()
                .unwrap_or("none")
                .to_ascii_lowercase()
                .as_str()
            {
                "none" => RetransmissionPolicy::None,
                "noack" => RetransmissionPolicy::NoAckEtxRepeat,
                "ack" => RetransmissionPolicy::AckBased {
                    max_retries: proto.ack_max_retries,
                    ack_timeout_s: proto.ack_timeout.as_secs_f64(),
                },
                other => {
                    return Err(Error::config(format!(
                        "unknown retransmission policy {other:?} (expected none|noack|ack)"
                    )))
                }
            },
        )
    }

    pub fn strategy_kind(&self) -> Result<StrategyKind> {
        self.strategy
            .kind
            .as_deref()
            .unwrap_or("ppvg")
            .parse::<StrategyKind>()
    }

    fn overlay(&self) -> Option<ParentOverlay> {
        self.strategy.overlay.as_ref().map(|entries| {
            entries
                .iter()
                .map(|e| {
                    (
                        NodeId(e.node),
                        e.parents.iter().map(|&p| NodeId(p)).collect(),
                    )
                })
                .collect()
        })
    }

    /// Build the single-run scenario described by `[run]`.
    pub fn scenario(&self) -> Result<Scenario> {
        let topology = self.topology()?;
        let table = ChannelTable::load_validated(&self.channel.table, &topology)?;
        Ok(Scenario {
            topology,
            table,
            budget: self.budget(),
            threshold: self.threshold(),
            posture: PostureId::new(self.run.posture.unwrap_or(1))?,
            strategy: self.strategy_kind()?,
            rate_pps: self.run.rate_pps.unwrap_or(10.0),
            duration: SimTime::from_secs_f64(self.run.duration_s.unwrap_or(30.0)),
            seed: self.run.seed.unwrap_or(1),
            params: self.run_params()?,
            overlay: self.overlay(),
        })
    }

    /// Build the sweep described by `[sweep]` (axes default to the full
    /// paper grid: all strategies, all postures, the published rate range,
    /// ten seeds).
    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let mut base = self.scenario()?;
        if let Some(d) = self.sweep.duration_s {
            base.duration = SimTime::from_secs_f64(d);
        }
        let postures = match &self.sweep.postures {
            Some(ids) => ids
                .iter()
                .map(|&p| PostureId::new(p))
                .collect::<Result<Vec<_>>>()?,
            None => PostureId::ALL.to_vec(),
        };
        let strategies = match &self.sweep.strategies {
            Some(names) => names
                .iter()
                .map(|n| n.parse::<StrategyKind>())
                .collect::<Result<Vec<_>>>()?,
            None => StrategyKind::ALL.to_vec(),
        };
        let rates = self
            .sweep
            .rates_pps
            .clone()
            .unwrap_or_else(|| DEFAULT_RATE_GRID.to_vec());
        let seeds = match &self.sweep.seeds {
            Some(seeds) => seeds.clone(),
            None => {
                let base_seed = self.sweep.seed_base.unwrap_or(1);
                let count = self.sweep.seed_count.unwrap_or(10);
                (0..count).map(|i| base_seed + i).collect()
            }
        };
        if seeds.is_empty() {
            return Err(Error::config("sweep declares no seeds"));
        }
        Ok(SweepSpec {
            base,
            postures,
            strategies,
            rates_pps: rates,
            seeds,
        })
    }
}
