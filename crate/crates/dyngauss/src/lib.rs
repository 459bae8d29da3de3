//! Stochastic temporal graph embedding engine.
//!
//! Each node of every graph snapshot is embedded as a diagonal-covariance
//! Gaussian by a one-hidden-layer encoder trained on hop-ranked node
//! triplets with a square-exponential contrastive loss. Training warm-starts
//! across timestamps: parameters transfer from the previous snapshot and the
//! input layer widens function-preservingly when the graph grows. On top of
//! the embeddings sit a temporal link-prediction harness (MAP / MRR) and an
//! uncertainty analyzer that estimates the effective dimensionality of the
//! embedding uncertainty and recommends an embedding size from it.
//!
//! Start with [`sbm::generate_sbm`] or [`graph::load_dataset`] for data,
//! [`trainer::train_dynamic`] for embeddings, [`linkpred`] for evaluation
//! and [`uncertainty`] for the size-selection analysis. The `examples/`
//! directory holds one runnable walkthrough per capability; the `dyngauss`
//! binary wires the same pieces into a reproducible file-based pipeline.

pub mod checkpoint;
pub mod cli;
pub mod encoder;
pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod hops;
pub mod kv;
pub mod linkpred;
pub mod loss;
pub mod optim;
pub mod sbm;
pub mod trainer;
pub mod uncertainty;
pub mod widen;

pub use encoder::{encode, encode_node, init_params, EncoderParams, GaussianEmbedding};
pub use error::{Error, Result};
pub use graph::{
    load_dataset, load_temporal_graph, split_timestamps, write_dataset, ColumnLayout,
    DatasetFormat, Edge, NodeFeatures, Snapshot, TemporalGraph, TimestampSplit,
};
pub use hops::{build_hop_table, sample_triplets, HopTable, SampleOptions, Triplet, TripletSet};
pub use linkpred::{
    average_precision, build_lp_dataset, evaluate_lp, sample_links, train_lp, EmbeddingLag,
    FeatureMode, LinkExample, LpDataset, LpModel, LpOptions, LpTrainConfig, RankReport,
};
pub use loss::{kl_divergence, loss_and_grads, triplet_loss, EncoderGrads, LossBatch};
pub use optim::{adam_step, AdamState, EarlyStop, StopDecision};
pub use sbm::{generate_sbm, generate_sbm_traced, SbmConfig, SbmTrace};
pub use trainer::{
    train_dynamic, train_to_dir, EmbeddingStore, RunDir, TimestampRecord, TrainConfig, TrainSummary,
};
pub use uncertainty::{
    estimate_du, select_embedding_size, uncertainty_curve, DuEstimate, UncertaintyCurve,
};
pub use widen::{widen_input, WidenMap, WidenOptions};
