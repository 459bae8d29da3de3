//! Uncertainty-versus-time curves across embedding sizes, the effective
//! dimensionality estimate, and the resulting size recommendation.
//!
//! ```text
//! cargo run --release --example uncertainty_report
//! ```

use dyngauss::sbm::{generate_sbm, SbmConfig};
use dyngauss::trainer::{train_dynamic, TrainConfig};
use dyngauss::uncertainty::{
    average_curves, estimate_du, select_embedding_size, uncertainty_curve,
};

fn main() -> dyngauss::Result<()> {
    let graph = generate_sbm(&SbmConfig {
        n_nodes: 90,
        n_communities: 3,
        p_in: 0.3,
        p_out: 0.02,
        move_min: 3,
        move_max: 6,
        n_timestamps: 5,
        seed: 2,
    })?;

    let sizes = [4, 8, 16, 32];
    let seeds = [0u64, 1];
    let mut averaged = Vec::new();
    for &embed_size in &sizes {
        let mut curves = Vec::new();
        for &seed in &seeds {
            let store = train_dynamic(
                &graph,
                &TrainConfig {
                    embed_size,
                    hidden_size: 48,
                    epochs: 120,
                    patience: 100,
                    per_anchor: 2,
                    seed,
                    ..TrainConfig::default()
                },
            )?;
            curves.push(uncertainty_curve(&store, seed)?);
        }
        let mean = average_curves(&curves)?;
        println!(
            "L = {embed_size:>2}: mean std per timestamp {:?}",
            mean.mean_sigma
                .iter()
                .map(|v| (v * 1000.0).round() / 1000.0)
                .collect::<Vec<_>>()
        );
        averaged.push(mean);
    }

    let estimate = estimate_du(&averaged, 0.05)?;
    println!(
        "\nadjacent-size relative gaps: {:?}",
        estimate.convergence_scores
    );
    println!(
        "effective uncertainty dimensionality: {}{}",
        estimate.d_u,
        if estimate.non_converged {
            " (not converged within the candidate set)"
        } else {
            ""
        }
    );
    println!(
        "recommended embedding size: {}",
        select_embedding_size(&estimate)
    );
    Ok(())
}
