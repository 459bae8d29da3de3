//! Temporal link prediction on a small synthetic graph: train embeddings,
//! fit the link classifier, and compare MAP / MRR against a random-embedding
//! baseline under the same harness.
//!
//! ```text
//! cargo run --release --example link_prediction
//! ```

use dyngauss::encoder::GaussianEmbedding;
use dyngauss::graph::split_timestamps;
use dyngauss::linkpred::{
    build_lp_dataset, evaluate_lp, train_lp, EmbeddingLag, FeatureMode, LpOptions, LpTrainConfig,
};
use dyngauss::sbm::{generate_sbm, SbmConfig};
use dyngauss::trainer::{train_dynamic, EmbeddingStore, TimestampRecord, TrainConfig};
use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> dyngauss::Result<()> {
    let graph = generate_sbm(&SbmConfig {
        n_nodes: 120,
        n_communities: 3,
        p_in: 0.25,
        p_out: 0.02,
        move_min: 4,
        move_max: 8,
        n_timestamps: 8,
        seed: 1,
    })?;
    let store = train_dynamic(
        &graph,
        &TrainConfig {
            embed_size: 8,
            hidden_size: 64,
            epochs: 400,
            patience: 100,
            per_anchor: 2,
            seed: 0,
            ..TrainConfig::default()
        },
    )?;

    let split = split_timestamps(&graph, (0.7, 0.1, 0.2))?;
    println!(
        "timestamp split: train {:?}, val {:?}, test {:?}",
        split.train, split.val, split.test
    );
    let options = LpOptions {
        neg_ratio: 10.0,
        feature_mode: FeatureMode::Mu,
        lag: EmbeddingLag::Previous,
        seed: 3,
    };
    let lp_config = LpTrainConfig {
        hidden_size: store.embed_size,
        epochs: 150,
        patience: 20,
        ..LpTrainConfig::default()
    };

    let evaluate = |st: &EmbeddingStore, tag: &str| -> dyngauss::Result<()> {
        let train = build_lp_dataset(&graph, st, split.train.clone(), options)?;
        let val = build_lp_dataset(&graph, st, split.val.clone(), options)?;
        let test = build_lp_dataset(&graph, st, split.test.clone(), options)?;
        let model = train_lp(&train, &val, &lp_config)?;
        let report = evaluate_lp(&model, &test)?;
        println!("\n{tag}:");
        for tm in &report.per_timestamp {
            println!(
                "  t{}: MAP {:.4}  MRR {:.4}  ({} queries)",
                tm.timestamp_index, tm.map, tm.mrr, tm.queries
            );
        }
        println!("  aggregate: MAP {:.4}  MRR {:.4}", report.map, report.mrr);
        Ok(())
    };

    evaluate(&store, "trained embeddings")?;

    // same harness on random Gaussian embeddings of the same shape
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut normal = move || {
        let (u1, u2): (f64, f64) = (rng.gen_range(1e-12..1.0), rng.gen());
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let baseline = EmbeddingStore {
        embed_size: store.embed_size,
        config_fingerprint: String::new(),
        records: store
            .records
            .iter()
            .map(|r| TimestampRecord {
                timestamp_index: r.timestamp_index,
                embeddings: r
                    .embeddings
                    .iter()
                    .map(|e| GaussianEmbedding {
                        mu: Array1::from_shape_fn(e.mu.len(), |_| normal()),
                        sigma2: Array1::from_elem(e.sigma2.len(), 1.0),
                    })
                    .collect(),
                summary: r.summary.clone(),
            })
            .collect(),
    };
    evaluate(&baseline, "random-embedding baseline")?;
    Ok(())
}
