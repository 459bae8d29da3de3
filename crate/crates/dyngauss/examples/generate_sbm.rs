//! Generate a dynamic stochastic-block-model graph and write it as a
//! dataset directory.
//!
//! ```text
//! cargo run --example generate_sbm [output-dir]
//! ```

use dyngauss::graph::write_dataset;
use dyngauss::sbm::{generate_sbm_traced, SbmConfig};

fn main() -> dyngauss::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("dyngauss_sbm_example"));

    let config = SbmConfig {
        n_nodes: 300,
        n_communities: 3,
        p_in: 0.2,
        p_out: 0.01,
        move_min: 10,
        move_max: 20,
        n_timestamps: 12,
        seed: 1,
    };
    let trace = generate_sbm_traced(&config)?;

    println!("snapshot edge counts:");
    for snap in trace.graph.snapshots() {
        println!(
            "  t{:2}: {:5} edges",
            snap.timestamp_index,
            snap.edge_count()
        );
    }
    println!("nodes moved per step:");
    for (step, moved) in trace.moved.iter().enumerate() {
        println!("  t{:2} -> t{:2}: {} nodes", step, step + 1, moved.len());
    }

    write_dataset(&trace.graph, &out)?;
    println!("dataset written to {}", out.display());
    Ok(())
}
