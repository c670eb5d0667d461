//! The No-ACK repeat improvement window.
//!
//! On lossy links, transmitting each frame ceil(ETX) times without waiting
//! for acknowledgments lifts the reception rate — up to the rate where the
//! extra repeats saturate the channel themselves.
//!
//! Run with: cargo run --release --example noack_window

use bancast::channel::{gaussian_cdf, LinkStats};
use bancast::reliability::RetransmissionPolicy;
use bancast::{BodyTopology, ChannelTable, NodeId, PostureId, Scenario, StrategyKind};

/// Mean attenuation whose success probability against the 40 dB budget is
/// `p` (bisection on the CDF).
fn mean_for_probability(p: f64, sd: f64) -> f64 {
    let (mut lo, mut hi) = (-100.0, 300.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gaussian_cdf(40.0, mid, sd) > p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn main() -> bancast::Result<()> {
    // A lossy star: three sources with direct links of 75%, 60%, and 45%
    // per-transmission success.
    let topology = BodyTopology::new(
        (0..4).map(|i| format!("n{i}")).collect(),
        NodeId(0),
    )?;
    let mut table = ChannelTable::new();
    for posture in PostureId::ALL {
        for ((a, b), p) in [((0u8, 1u8), 0.75), ((0, 2), 0.6), ((0, 3), 0.45)] {
            table.insert(LinkStats::new(
                posture,
                NodeId(a),
                NodeId(b),
                mean_for_probability(p, 5.0),
                5.0,
            )?)?;
        }
        for (a, b) in [(1u8, 2u8), (1, 3), (2, 3)] {
            table.insert(LinkStats::new(posture, NodeId(a), NodeId(b), 500.0, 5.0)?)?;
        }
    }

    println!("{:>8} {:>14} {:>14} {:>8}", "rate", "no repeats", "noack repeats", "gain");
    for rate in [1.0, 2.0, 5.0, 10.0, 20.0, 50.0] {
        let mean_for = |policy: RetransmissionPolicy| -> bancast::Result<f64> {
            let mut mean = 0.0;
            for seed in 1..=5u64 {
                let mut s = Scenario::new(
                    table.clone(),
                    PostureId::new(1)?,
                    StrategyKind::Apap,
                    rate,
                    10.0,
                    seed,
                );
                s.topology = topology.clone();
                s.params.policy = policy;
                mean += s.run()?.reception_rate / 5.0;
            }
            Ok(mean)
        };
        let without = mean_for(RetransmissionPolicy::None)?;
        let with = mean_for(RetransmissionPolicy::NoAckEtxRepeat)?;
        println!(
            "{:>8} {:>14.3} {:>14.3} {:>+8.3}",
            rate,
            without,
            with,
            with - without
        );
    }
    println!("\n(multi-paths forwarding, 10 s per run, mean of 5 seeds)");
    Ok(())
}
