//! One runnable scenario: topology + channel + strategy + load, validated
//! and executed.

use crate::channel::{
    connectivity_graph, ChannelTable, ConnectivityGraph, PostureId, RadioBudget,
};
use crate::engine::{stats_matrix, RunParams, Simulation, Strategy, Trace, World};
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::ppvg::{build_ppvg_tree, PpvgTree};
use crate::strategies::{
    build_strategy, hop_gradient_overlay, validate_overlay, ParentOverlay, StrategyKind,
};
use crate::time::SimTime;
use crate::topology::BodyTopology;

/// A fully specified run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub topology: BodyTopology,
    pub table: ChannelTable,
    pub budget: RadioBudget,
    /// Link-existence probability threshold (strictly-greater rule).
    pub threshold: f64,
    pub posture: PostureId,
    pub strategy: StrategyKind,
    pub rate_pps: f64,
    pub duration: SimTime,
    pub seed: u64,
    pub params: RunParams,
    /// Optional explicit parent overlay for the multi-paths strategies.
    pub overlay: Option<ParentOverlay>,
}

impl Scenario {
    /// A scenario over the reference topology with every parameter at its
    /// default except what the caller sets afterwards.
    pub fn new(
        table: ChannelTable,
        posture: PostureId,
        strategy: StrategyKind,
        rate_pps: f64,
        duration_s: f64,
        seed: u64,
    ) -> Self {
        Scenario {
            topology: BodyTopology::body_default(),
            table,
            budget: RadioBudget::default(),
            threshold: crate::channel::DEFAULT_PROBABILITY_THRESHOLD,
            posture,
            strategy,
            rate_pps,
            duration: SimTime::from_secs_f64(duration_s),
            seed,
            params: RunParams::default(),
            overlay: None,
        }
    }

    /// Validate everything that can fail before the run starts.
    pub fn prepare(&self) -> Result<Prepared> {
        if self.rate_pps.is_nan() || self.rate_pps <= 0.0 || !self.rate_pps.is_finite() {
            return Err(Error::config(format!("rate {} must be > 0", self.rate_pps)));
        }
        if self.duration == SimTime::ZERO {
            return Err(Error::config("duration must be > 0"));
        }
        if !(0.0..1.0).contains(&self.threshold) {
            return Err(Error::config(format!(
                "threshold {} must be within [0, 1)",
                self.threshold
            )));
        }
        let graph = connectivity_graph(
            &self.table,
            &self.topology,
            self.posture,
            &self.budget,
            self.threshold,
        )?;
        let overlay = if self.strategy.is_multipath() {
            let overlay = match &self.overlay {
                Some(o) => {
                    validate_overlay(&graph, o, self.topology.sink())?;
                    o.clone()
                }
                None => hop_gradient_overlay(&graph, self.topology.sink())?,
            };
            Some(overlay)
        } else {
            None
        };
        let tree = if self.strategy == StrategyKind::Ppvg {
            Some(build_ppvg_tree(&graph, self.topology.sink()).map_err(|e| {
                Error::config(format!("posture {}: {e}", self.posture))
            })?)
        } else {
            None
        };
        Ok(Prepared {
            graph,
            overlay,
            tree,
        })
    }

    fn execute(&self, collect_trace: bool) -> Result<(MetricsReport, Option<Trace>)> {
        let prepared = self.prepare()?;
        let mut params = self.params;
        params.max_attenuation_db = self.budget.max_attenuation_db();
        let matrix = stats_matrix(&self.table, &self.topology, self.posture);
        let world = World::new(
            &self.topology,
            prepared.graph,
            matrix,
            params,
            self.rate_pps,
            self.duration,
            self.seed,
            collect_trace,
        );
        let sink = self.topology.sink();
        let strategies: Vec<Box<dyn Strategy>> = self
            .topology
            .node_ids()
            .map(|node| {
                build_strategy(
                    self.strategy,
                    node,
                    sink,
                    prepared.overlay.as_ref(),
                    prepared.tree.as_ref(),
                )
            })
            .collect();
        Ok(Simulation::new(world, strategies).run())
    }

    /// Run to completion and report.
    pub fn run(&self) -> Result<MetricsReport> {
        self.execute(false).map(|(report, _)| report)
    }

    /// Run with the invariant-checking trace enabled.
    pub fn run_traced(&self) -> Result<(MetricsReport, Trace)> {
        self.execute(true)
            .map(|(report, trace)| (report, trace.expect("trace was requested")))
    }
}

/// Artifacts computed by validation, reused by the run.
pub struct Prepared {
    pub graph: ConnectivityGraph,
    pub overlay: Option<ParentOverlay>,
    pub tree: Option<PpvgTree>,
}
