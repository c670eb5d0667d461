//! Per-link success probabilities and expected transmission counts.
//!
//! Loads the bundled synthetic channel statistics and prints, for each
//! posture, every usable link with its existence probability and ETX —
//! the quantities the routing strategies build on.
//!
//! Run with: cargo run --example etx_table

use std::path::Path;

use bancast::{
    connectivity_graph, BodyTopology, ChannelTable, PostureId, RadioBudget,
};

fn main() -> bancast::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/channel_synthetic.csv");
    let topology = BodyTopology::body_default();
    let table = ChannelTable::load_validated(&data, &topology)?;
    let budget = RadioBudget::default();
    println!(
        "link budget: {} dBm tx - ({} dBm) sensitivity = {} dB",
        budget.tx_power_dbm,
        budget.sensitivity_dbm,
        budget.max_attenuation_db()
    );

    for posture in PostureId::ALL {
        let graph = connectivity_graph(&table, &topology, posture, &budget, 0.01)?;
        println!("\nposture {posture} ({}): {} usable links", posture.label(), graph.edges().len());
        println!("  {:<24} {:>12} {:>8}", "link", "probability", "etx");
        for e in graph.edges() {
            println!(
                "  {:<24} {:>12.4} {:>8.2}",
                format!("{} - {}", topology.label(e.a), topology.label(e.b)),
                e.probability,
                e.etx
            );
        }
    }
    Ok(())
}
