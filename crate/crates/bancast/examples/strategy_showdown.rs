//! All fourteen strategies side by side.
//!
//! Runs every strategy in the walking posture at 10 packets per second per
//! source (the nominal medical-application rate) and tabulates reception,
//! delivery order, and transmission counts, averaged over five seeds.
//! CTP and ORW run their native ACK-based retransmission; everything else
//! uses No-ACK ETX repeats.
//!
//! Run with: cargo run --release --example strategy_showdown

use std::path::Path;

use bancast::reliability::RetransmissionPolicy;
use bancast::{ChannelTable, PostureId, Scenario, StrategyKind};

fn main() -> bancast::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/channel_synthetic.csv");
    let table = ChannelTable::load_csv(&data)?;
    let seeds: Vec<u64> = (1..=5).collect();

    println!(
        "{:<12} {:>10} {:>12} {:>12} {:>14}",
        "strategy", "reception", "inversions", "total-order", "transmissions"
    );
    for kind in StrategyKind::ALL {
        let mut reception = 0.0;
        let mut inversions = 0.0;
        let mut order = 0.0;
        let mut tx = 0.0;
        for &seed in &seeds {
            let mut s = Scenario::new(
                table.clone(),
                PostureId::new(1)?,
                kind,
                10.0,
                30.0,
                seed,
            );
            s.params.policy = RetransmissionPolicy::NoAckEtxRepeat;
            let r = s.run()?;
            let n = seeds.len() as f64;
            reception += r.reception_rate / n;
            inversions += r.inversions as f64 / n;
            order += r.total_order_rate / n;
            tx += r.transmissions as f64 / n;
        }
        println!(
            "{:<12} {:>10.3} {:>12.1} {:>12.3} {:>14.0}",
            kind.name(),
            reception,
            inversions,
            order,
            tx
        );
    }
    println!("\n(walking posture, 10 pkt/s per source, 30 s, mean of 5 seeds)");
    Ok(())
}
