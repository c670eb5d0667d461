//! Reception rate under increasing traffic.
//!
//! Sweeps the per-source packet rate from 1 to 500 packets per second for
//! a flooding and a multi-paths strategy: reception collapses as the shared
//! channel saturates with collisions and queue overflow.
//!
//! Run with: cargo run --release --example rate_stress

use std::path::Path;

use bancast::{ChannelTable, PostureId, Scenario, StrategyKind};

fn main() -> bancast::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/channel_synthetic.csv");
    let table = ChannelTable::load_csv(&data)?;
    let rates = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 75.0, 100.0, 200.0, 500.0];
    let seeds: Vec<u64> = (1..=3).collect();

    print!("{:>8}", "rate");
    for kind in [StrategyKind::FloodToSink, StrategyKind::Apap, StrategyKind::Ppvg] {
        print!(" {:>12}", kind.name());
    }
    println!();

    for rate in rates {
        print!("{:>8}", rate);
        for kind in [StrategyKind::FloodToSink, StrategyKind::Apap, StrategyKind::Ppvg] {
            let mut mean = 0.0;
            for &seed in &seeds {
                let s = Scenario::new(
                    table.clone(),
                    PostureId::new(1)?,
                    kind,
                    rate,
                    10.0,
                    seed,
                );
                mean += s.run()?.reception_rate / seeds.len() as f64;
            }
            print!(" {:>12.3}", mean);
        }
        println!();
    }
    println!("\n(walking posture, 10 s per run, mean of 3 seeds, no retransmission)");
    Ok(())
}
