//! Train Gaussian embeddings over all snapshots of a small synthetic graph,
//! showing the warm-start effect of parameter transfer.
//!
//! ```text
//! cargo run --release --example train_dynamic
//! ```

use dyngauss::sbm::{generate_sbm, SbmConfig};
use dyngauss::trainer::{train_dynamic, TrainConfig};

fn main() -> dyngauss::Result<()> {
    let graph = generate_sbm(&SbmConfig {
        n_nodes: 90,
        n_communities: 3,
        p_in: 0.3,
        p_out: 0.02,
        move_min: 3,
        move_max: 6,
        n_timestamps: 6,
        seed: 4,
    })?;

    let config = TrainConfig {
        embed_size: 8,
        hidden_size: 64,
        epochs: 150,
        patience: 100,
        lr: 1e-3,
        max_hop: 2,
        per_anchor: 2,
        seed: 0,
        ..TrainConfig::default()
    };

    let store = train_dynamic(&graph, &config)?;
    println!("t  epochs  first-loss  final-loss  to-1.05x-band");
    for record in &store.records {
        let s = &record.summary;
        println!(
            "{:<2} {:>6}  {:>10.2}  {:>10.2}  {:>8}",
            record.timestamp_index,
            s.epochs_run,
            s.epoch_losses.first().unwrap(),
            s.final_loss,
            s.epochs_to_reach(1.05)
                .map(|e| e.to_string())
                .unwrap_or_else(|| "-".into()),
        );
    }
    let node0 = &store.records.last().unwrap().embeddings[0];
    println!(
        "\nnode 0 at the last timestamp: mu[0..3] = {:.3?}, sigma2[0..3] = {:.3?}",
        &node0.mu.as_slice().unwrap()[..3],
        &node0.sigma2.as_slice().unwrap()[..3],
    );
    Ok(())
}
