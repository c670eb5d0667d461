//! A small sweep with CSV output.
//!
//! Crosses three strategies with all seven postures and two rates, three
//! seeds each, then prints the per-cell means. Re-running produces the
//! same bytes.
//!
//! Run with: cargo run --release --example posture_sweep

use std::path::Path;

use bancast::reliability::RetransmissionPolicy;
use bancast::sweep::{aggregate, aggregate_to_csv, run_sweep, rows_to_csv, SweepSpec};
use bancast::{ChannelTable, PostureId, Scenario, StrategyKind};

fn main() -> bancast::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/channel_synthetic.csv");
    let table = ChannelTable::load_csv(&data)?;
    let mut base = Scenario::new(table, PostureId::new(1)?, StrategyKind::Ppvg, 10.0, 10.0, 1);
    base.params.policy = RetransmissionPolicy::NoAckEtxRepeat;

    let spec = SweepSpec {
        base,
        postures: PostureId::ALL.to_vec(),
        strategies: vec![StrategyKind::Ppvg, StrategyKind::Apap, StrategyKind::FloodToSink],
        rates_pps: vec![10.0, 50.0],
        seeds: vec![1, 2, 3],
    };
    println!("running {} cells...", spec.cell_count());
    let rows = run_sweep(&spec)?;

    let csv = rows_to_csv(&rows);
    println!(
        "per-run CSV: {} rows, e.g.\n  {}\n  {}",
        rows.len(),
        csv.lines().next().unwrap(),
        csv.lines().nth(1).unwrap()
    );

    println!("\nper-cell means:");
    print!("{}", aggregate_to_csv(&aggregate(&rows)));

    let again = rows_to_csv(&run_sweep(&spec)?);
    assert_eq!(csv, again);
    println!("\nsecond execution reproduced the CSV byte for byte");
    Ok(())
}
