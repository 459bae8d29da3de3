//! Build exact k-hop neighborhoods for a small graph and sample hop-ranked
//! triplets from them.
//!
//! ```text
//! cargo run --example khop_triplets
//! ```

use dyngauss::graph::{Edge, Snapshot};
use dyngauss::hops::{build_hop_table, dump_triplets, sample_triplets, SampleOptions};

fn main() -> dyngauss::Result<()> {
    // two squares joined by a bridge: 0-1-2-3-0 and 4-5-6-7-4, bridge 3-4
    let edges = [
        (0, 1),
        (1, 2),
        (2, 3),
        (3, 0),
        (4, 5),
        (5, 6),
        (6, 7),
        (7, 4),
        (3, 4),
    ];
    let snapshot = Snapshot::new(
        0,
        8,
        edges
            .iter()
            .map(|&(s, t)| Edge {
                source: s,
                target: t,
                weight: 1.0,
            })
            .collect(),
        false,
    )?;

    let table = build_hop_table(&snapshot, 3);
    for node in 0..snapshot.node_count {
        let levels: Vec<String> = (1..=3)
            .map(|k| format!("{k}-hop {:?}", table.hop_set(node, k)))
            .collect();
        println!("node {node}: {}", levels.join(", "));
    }

    let set = sample_triplets(
        &table,
        0,
        SampleOptions {
            per_anchor: 1,
            weighted: false,
        },
        42,
    );
    println!(
        "\n{} triplets (anchor positive negative hop_pos hop_neg):",
        set.len()
    );
    print!("{}", dump_triplets(&set));
    Ok(())
}
