//! End-to-end engine behavior on small, analytically transparent scenarios.

use bancast::channel::{ChannelTable, LinkStats, PostureId};
use bancast::engine::RunParams;
use bancast::metrics::MetricsReport;
use bancast::reliability::RetransmissionPolicy;
use bancast::scenario::Scenario;
use bancast::strategies::StrategyKind;
use bancast::topology::BodyTopology;

/// A table with the same (mean, stddev) on every pair of every posture.
fn uniform_table(mean: f64, sd: f64) -> ChannelTable {
    let topo = BodyTopology::body_default();
    let mut table = ChannelTable::new();
    for posture in PostureId::ALL {
        for (a, b) in topo.pairs() {
            table
                .insert(LinkStats::new(posture, a, b, mean, sd).unwrap())
                .unwrap();
        }
    }
    table
}

fn scenario(strategy: StrategyKind, table: ChannelTable, rate: f64, seed: u64) -> Scenario {
    Scenario::new(table, PostureId::new(1).unwrap(), strategy, rate, 10.0, seed)
}

fn assert_conserved(report: &MetricsReport) {
    assert!(
        report.is_conserved(),
        "conservation violated: delivered {} + losses {} != generated {} ({report:?})",
        report.delivered_unique,
        report.losses.total(),
        report.generated
    );
}

#[test]
fn generation_count_is_rate_times_duration_times_sources() {
    let s = scenario(StrategyKind::Ppvg, uniform_table(10.0, 1.0), 1.0, 7);
    let report = s.run().unwrap();
    assert_eq!(report.generated, 60); // 1 pkt/s x 10 s x 6 sources
}

#[test]
fn lossless_ppvg_delivers_everything_in_order() {
    // On the complete lossless graph every source unicasts straight to the
    // sink. The only possible loss is two sources whose fixed generation
    // phases land within one airtime of each other (they then collide on
    // every packet, since the MAC has no carrier sensing); runs without such
    // a phase overlap deliver every packet.
    let mut clean_runs = 0;
    for seed in 1..=10 {
        let s = scenario(StrategyKind::Ppvg, uniform_table(10.0, 1.0), 1.0, seed);
        let report = s.run().unwrap();
        assert_conserved(&report);
        assert_eq!(report.inversions, 0);
        assert_eq!(report.total_order_rate, 1.0);
        assert_eq!(report.duplicates, 0);
        let l = report.losses;
        assert_eq!(
            (l.attenuation, l.buffer, l.ttl_expired, l.policy_discard, l.pending),
            (0, 0, 0, 0, 0),
            "only collisions can occur on a lossless graph: {report:?}"
        );
        if report.losses.collision == 0 {
            assert_eq!(report.reception_rate, 1.0, "{report:?}");
            // One ETX-1 hop per packet: one transmission each.
            assert_eq!(report.transmissions, report.generated);
            clean_runs += 1;
        }
    }
    assert!(
        clean_runs >= 5,
        "phase overlaps should be the exception, got {clean_runs}/10 clean runs"
    );
}

#[test]
fn same_seed_reproduces_the_report_exactly() {
    for kind in [
        StrategyKind::Apap,
        StrategyKind::MinAtt,
        StrategyKind::Ctp,
        StrategyKind::Orw,
        StrategyKind::FloodToSink,
        StrategyKind::ProbaCvg,
        StrategyKind::Ppvg,
    ] {
        let a = scenario(kind, uniform_table(38.0, 4.0), 10.0, 42).run().unwrap();
        let b = scenario(kind, uniform_table(38.0, 4.0), 10.0, 42).run().unwrap();
        assert_eq!(a, b, "{kind:?} diverged between identical runs");
        assert_eq!(
            a.csv_row(kind.name(), 1, 10.0, 42),
            b.csv_row(kind.name(), 1, 10.0, 42)
        );
        assert_conserved(&a);
    }
}

#[test]
fn different_seeds_usually_differ() {
    let a = scenario(StrategyKind::FloodToSink, uniform_table(38.0, 4.0), 10.0, 1)
        .run()
        .unwrap();
    let b = scenario(StrategyKind::FloodToSink, uniform_table(38.0, 4.0), 10.0, 2)
        .run()
        .unwrap();
    assert_ne!(a, b);
}

#[test]
fn conservation_holds_across_strategies_and_loads() {
    for kind in StrategyKind::ALL {
        for rate in [1.0, 50.0, 500.0] {
            let report = scenario(kind, uniform_table(37.0, 5.0), rate, 11)
                .run()
                .unwrap();
            assert_conserved(&report);
            assert!(report.transmissions >= report.delivered_unique);
        }
    }
}

#[test]
fn data_frame_airtime_is_4256_microseconds() {
    let s = scenario(StrategyKind::Ppvg, uniform_table(10.0, 1.0), 1.0, 5);
    let (_, trace) = s.run_traced().unwrap();
    let tx = trace
        .transmissions
        .iter()
        .find(|t| t.is_data)
        .expect("a data transmission happened");
    assert_eq!(tx.end.ns() - tx.start.ns(), 4_256_000);
}

#[test]
fn noack_bursts_send_ceil_etx_times() {
    // mean 40, sd 5 gives p = 0.5 on every link: ETX 2, so 2 sends per hop.
    let mut s = scenario(StrategyKind::Ppvg, uniform_table(40.0, 5.0), 5.0, 9);
    s.params.policy = RetransmissionPolicy::NoAckEtxRepeat;
    let (report, trace) = s.run_traced().unwrap();
    assert!(!trace.data_bursts.is_empty());
    for burst in &trace.data_bursts {
        assert_eq!(burst.planned, burst.plan_etx.ceil() as u32);
        assert_eq!(burst.sent, burst.planned);
        assert_eq!(burst.planned, 2);
    }
    assert_conserved(&report);
}

#[test]
fn repeat_bursts_are_contiguous_per_node() {
    let mut s = scenario(StrategyKind::Ppvg, uniform_table(40.0, 5.0), 20.0, 13);
    s.params.policy = RetransmissionPolicy::NoAckEtxRepeat;
    let (_, trace) = s.run_traced().unwrap();
    for seq in &trace.node_data_seq {
        // Each uid must appear as one contiguous block.
        let mut seen_blocks: Vec<u64> = Vec::new();
        let mut prev = None;
        for &uid in seq {
            if prev != Some(uid) {
                assert!(
                    !seen_blocks.contains(&uid),
                    "burst {uid} interleaved with another data frame"
                );
                seen_blocks.push(uid);
            }
            prev = Some(uid);
        }
    }
}

#[test]
fn no_delivery_overlaps_the_receivers_own_transmission() {
    for kind in [StrategyKind::FloodToSink, StrategyKind::Apap, StrategyKind::Ctp] {
        let s = scenario(kind, uniform_table(38.0, 4.0), 50.0, 17);
        let (_, trace) = s.run_traced().unwrap();
        for d in &trace.deliveries {
            for t in &trace.transmissions {
                if t.node == d.rx {
                    let overlap = t.start < d.frame_end && d.frame_start < t.end;
                    assert!(
                        !overlap,
                        "node {} received a frame [{}, {}] during its own transmission [{}, {}]",
                        d.rx, d.frame_start, d.frame_end, t.start, t.end
                    );
                }
            }
        }
    }
}

#[test]
fn tiny_queues_overflow_under_load() {
    // 500 pkt/s per source gives a 2 ms interval against a 4.256 ms airtime:
    // queues must build and spill.
    let mut s = scenario(StrategyKind::FloodToSink, uniform_table(10.0, 1.0), 500.0, 21);
    s.params = RunParams {
        queue_capacity: 2,
        ..s.params
    };
    let report = s.run().unwrap();
    assert!(report.losses.buffer > 0, "{report:?}");
    assert_conserved(&report);
}

#[test]
fn hopeless_channel_delivers_nothing() {
    // All pairs far beyond the budget: no edges at all, so packets die as
    // policy drops (no route anywhere).
    let table = uniform_table(200.0, 1.0);
    let s = scenario(StrategyKind::FloodToSink, table, 5.0, 23);
    let report = s.run().unwrap();
    assert_eq!(report.delivered_unique, 0);
    assert_conserved(&report);
}

#[test]
fn multipath_without_parents_is_a_config_error() {
    // No edges: the hop-gradient overlay cannot be built.
    let table = uniform_table(200.0, 1.0);
    let s = scenario(StrategyKind::Apap, table, 5.0, 23);
    assert!(s.run().is_err());
}

#[test]
fn zero_rate_is_rejected() {
    let s = scenario(StrategyKind::Ppvg, uniform_table(10.0, 1.0), 0.0, 1);
    assert!(s.run().is_err());
}

#[test]
fn ack_based_ctp_still_conserves_and_delivers() {
    let s = scenario(StrategyKind::Ctp, uniform_table(30.0, 5.0), 2.0, 31);
    let report = s.run().unwrap();
    assert_conserved(&report);
    assert!(
        report.delivered_unique > 0,
        "CTP delivered nothing: {report:?}"
    );
}

#[test]
fn orw_probing_establishes_delivery() {
    let s = scenario(StrategyKind::Orw, uniform_table(30.0, 5.0), 2.0, 33);
    let report = s.run().unwrap();
    assert_conserved(&report);
    assert!(
        report.delivered_unique > 0,
        "ORW delivered nothing: {report:?}"
    );
}

#[test]
fn attenuation_strategies_deliver_on_a_good_channel() {
    // Floors reflect each variant's character: the min-selectors route
    // straight toward the sink, BothMinAtt doubles the traffic with its
    // two-parent fan-out, and RandAtt wanders to arbitrary responders.
    for (kind, floor) in [
        (StrategyKind::MinAtt, 0.7),
        (StrategyKind::BothMinAtt, 0.4),
        (StrategyKind::CloseToMe, 0.7),
        (StrategyKind::RandAtt, 0.15),
    ] {
        let mut mean = 0.0;
        for seed in 1..=5 {
            let s = scenario(kind, uniform_table(25.0, 4.0), 1.0, seed);
            let report = s.run().unwrap();
            assert_conserved(&report);
            mean += report.reception_rate / 5.0;
        }
        assert!(mean > floor, "{kind:?} delivered too little: mean {mean}");
    }
}

#[test]
fn pruned_gossip_random_walk_reaches_the_sink_sometimes() {
    let s = scenario(StrategyKind::PrunedCvg, uniform_table(10.0, 1.0), 2.0, 37);
    let report = s.run().unwrap();
    assert_conserved(&report);
    assert!(report.delivered_unique > 0);
}

#[test]
fn ppvg_packets_travel_only_their_tree_path() {
    let mut s = scenario(StrategyKind::Ppvg, uniform_table(38.0, 4.0), 20.0, 41);
    s.params.policy = RetransmissionPolicy::NoAckEtxRepeat;
    let prepared = s.prepare().unwrap();
    let tree = prepared.tree.expect("ppvg scenario builds a tree");
    let (_, trace) = s.run_traced().unwrap();
    assert!(!trace.data_bursts.is_empty());
    for burst in &trace.data_bursts {
        let path = tree.path_to_sink(burst.source);
        assert!(
            path.contains(&burst.node),
            "node {} transmitted a packet of source {} outside its tree path {:?}",
            burst.node,
            burst.source,
            path
        );
    }
}
