//! The seven per-posture minimum-ETX trees.
//!
//! Each posture's connectivity graph yields one tree rooted at the sink;
//! every node's single preselected parent minimises the summed ETX of its
//! path. Postures with different link statistics can produce different
//! trees.
//!
//! Run with: cargo run --example ppvg_trees

use std::path::Path;

use bancast::{ppvg_trees_all_postures, BodyTopology, ChannelTable, RadioBudget};

fn main() -> bancast::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/channel_synthetic.csv");
    let topology = BodyTopology::body_default();
    let table = ChannelTable::load_validated(&data, &topology)?;
    let trees = ppvg_trees_all_postures(
        &table,
        &topology,
        &RadioBudget::default(),
        0.01,
        topology.sink(),
    )?;

    for (posture, tree) in &trees {
        println!("posture {posture} ({}):", posture.label());
        for (node, parent) in &tree.parent {
            println!(
                "  {:<10} -> {:<10} link etx {:>5.2}  total etx {:>5.2}",
                topology.label(*node),
                topology.label(*parent),
                tree.link_etx[node],
                tree.total_etx[node]
            );
        }
    }

    let shapes: std::collections::BTreeSet<String> = trees
        .values()
        .map(|t| {
            t.parent
                .iter()
                .map(|(n, p)| format!("{n}->{p}"))
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect();
    println!("\n{} distinct tree shapes across the 7 postures", shapes.len());
    Ok(())
}
