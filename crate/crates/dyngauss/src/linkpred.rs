//! Temporal link prediction harness.
//!
//! Positive examples are a snapshot's edges; negatives are uniformly sampled
//! non-edges, verified absent. Each example's feature concatenates the two
//! endpoints' embedding mean vectors (optionally the variances too), scored
//! by a one-hidden-layer classifier trained with class-weighted cross
//! entropy. Ranking quality is reported as mean average precision and mean
//! reciprocal rank per timestamp and aggregated over the evaluated range.

use std::collections::{BTreeMap, HashSet};

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Snapshot, TemporalGraph};
use crate::trainer::EmbeddingStore;

/// One labeled candidate link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkExample {
    pub source: usize,
    pub target: usize,
    pub label: bool,
    pub timestamp_index: usize,
}

/// Sample positive and negative links from one snapshot.
///
/// All edges (self-loops excluded) become positives; `ceil(neg_ratio * positives)`
/// distinct non-edge pairs become negatives, clamped to the number of
/// non-edges that exist. A snapshot with no non-edge at all cannot provide
/// negatives and is an error.
pub fn sample_links(snapshot: &Snapshot, neg_ratio: f64, seed: u64) -> Result<Vec<LinkExample>> {
    if neg_ratio <= 0.0 || neg_ratio.is_nan() {
        return Err(Error::validation("neg_ratio must be positive"));
    }
    let n = snapshot.node_count;
    let t = snapshot.timestamp_index;
    let positives: Vec<LinkExample> = snapshot
        .edges()
        .iter()
        .filter(|e| e.source != e.target)
        .map(|e| LinkExample {
            source: e.source,
            target: e.target,
            label: true,
            timestamp_index: t,
        })
        .collect();
    if positives.is_empty() {
        return Err(Error::validation(format!(
            "snapshot {t} has no usable edges to sample positives from"
        )));
    }

    let pair_count = if snapshot.directed {
        n * (n - 1)
    } else {
        n * (n - 1) / 2
    };
    let non_edge_count = pair_count - positives.len();
    if non_edge_count == 0 {
        return Err(Error::validation(format!(
            "snapshot {t} is complete, no negative links exist"
        )));
    }
    let requested = (neg_ratio * positives.len() as f64).ceil() as usize;
    let wanted = requested.min(non_edge_count);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taken: HashSet<(usize, usize)> = HashSet::with_capacity(wanted);
    let mut negatives = Vec::with_capacity(wanted);
    if wanted * 2 >= non_edge_count {
        // dense regime: enumerate non-edges and sample without replacement
        let mut pool: Vec<(usize, usize)> = Vec::with_capacity(non_edge_count);
        for i in 0..n {
            let range = if snapshot.directed { 0..n } else { (i + 1)..n };
            for j in range {
                if i != j && !snapshot.has_edge(i, j) {
                    pool.push((i, j));
                }
            }
        }
        for k in 0..wanted {
            let pick = rng.gen_range(k..pool.len());
            pool.swap(k, pick);
        }
        pool.truncate(wanted);
        for (s, tg) in pool {
            negatives.push(LinkExample {
                source: s,
                target: tg,
                label: false,
                timestamp_index: t,
            });
        }
    } else {
        while negatives.len() < wanted {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a == b {
                continue;
            }
            let (s, tg) = if snapshot.directed || a < b {
                (a, b)
            } else {
                (b, a)
            };
            if snapshot.has_edge(s, tg) || !taken.insert((s, tg)) {
                continue;
            }
            negatives.push(LinkExample {
                source: s,
                target: tg,
                label: false,
                timestamp_index: t,
            });
        }
    }

    let mut examples = positives;
    examples.extend(negatives);
    Ok(examples)
}

/// Which embedding components feed the link feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureMode {
    /// Concatenated endpoint means (2L).
    Mu,
    /// Concatenated means and variances (4L).
    MuSigma,
}

/// Which timestamp's embeddings score a link at timestamp `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingLag {
    /// Use embeddings trained at `t - 1`: predict the next snapshot's links
    /// from everything seen so far. Timestamp 0 is skipped.
    Previous,
    /// Use embeddings trained at `t` itself.
    Same,
}

/// Options for assembling link datasets.
#[derive(Debug, Clone, Copy)]
pub struct LpOptions {
    pub neg_ratio: f64,
    pub feature_mode: FeatureMode,
    pub lag: EmbeddingLag,
    pub seed: u64,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            neg_ratio: 5.0,
            feature_mode: FeatureMode::Mu,
            lag: EmbeddingLag::Previous,
            seed: 0,
        }
    }
}

/// A link example with its assembled feature vector.
#[derive(Debug, Clone)]
pub struct LpExample {
    pub source: usize,
    pub target: usize,
    pub label: bool,
    pub timestamp_index: usize,
    pub features: Vec<f64>,
}

/// Examples with features, ready for classifier training or evaluation.
#[derive(Debug, Clone)]
pub struct LpDataset {
    pub examples: Vec<LpExample>,
    pub feature_dim: usize,
    pub directed: bool,
}

/// Sample links over a timestamp range and attach embedding features.
pub fn build_lp_dataset(
    graph: &TemporalGraph,
    store: &EmbeddingStore,
    timestamps: std::ops::Range<usize>,
    options: LpOptions,
) -> Result<LpDataset> {
    let factor = match options.feature_mode {
        FeatureMode::Mu => 2,
        FeatureMode::MuSigma => 4,
    };
    let feature_dim = factor * store.embed_size;
    let directed = graph.snapshots().first().is_some_and(|s| s.directed);
    let mut examples = Vec::new();
    for t in timestamps {
        let embedding_t = match options.lag {
            EmbeddingLag::Previous => {
                if t == 0 {
                    continue;
                }
                t - 1
            }
            EmbeddingLag::Same => t,
        };
        let embeddings = store.embeddings_at(embedding_t).ok_or_else(|| {
            Error::validation(format!(
                "no embeddings for timestamp {embedding_t}, needed to score links at {t}"
            ))
        })?;
        let links = sample_links(
            graph.snapshot(t),
            options.neg_ratio,
            crate::trainer::derive_seed(options.seed, 11, t as u64),
        )?;
        for link in links {
            let fetch = |node: usize| {
                embeddings.get(node).ok_or_else(|| {
                    Error::validation(format!(
                        "node {node} has no embedding at timestamp {embedding_t}"
                    ))
                })
            };
            let (a, b) = (fetch(link.source)?, fetch(link.target)?);
            let mut features = Vec::with_capacity(feature_dim);
            features.extend(a.mu.iter());
            features.extend(b.mu.iter());
            if options.feature_mode == FeatureMode::MuSigma {
                features.extend(a.sigma2.iter());
                features.extend(b.sigma2.iter());
            }
            examples.push(LpExample {
                source: link.source,
                target: link.target,
                label: link.label,
                timestamp_index: link.timestamp_index,
                features,
            });
        }
    }
    Ok(LpDataset {
        examples,
        feature_dim,
        directed,
    })
}

/// One-hidden-layer link classifier.
#[derive(Debug, Clone)]
pub struct LpModel {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array1<f64>,
    pub b2: f64,
}

impl LpModel {
    fn init(feature_dim: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s1 = 1.0 / (feature_dim as f64).sqrt();
        let s2 = 1.0 / (hidden as f64).sqrt();
        let w1 = Array2::from_shape_fn((feature_dim, hidden), |_| rng.gen_range(-s1..s1));
        let w2 = Array1::from_shape_fn(hidden, |_| rng.gen_range(-s2..s2));
        Self {
            w1,
            b1: Array1::zeros(hidden),
            w2,
            b2: 0.0,
        }
    }

    /// Predicted link probability.
    pub fn predict(&self, features: &[f64]) -> f64 {
        let x = ndarray::ArrayView1::from(features);
        let h = (x.dot(&self.w1) + &self.b1).mapv(|v: f64| v.max(0.0));
        let logit = h.dot(&self.w2) + self.b2;
        1.0 / (1.0 + (-logit).exp())
    }
}

/// Training hyperparameters for the link classifier.
#[derive(Debug, Clone, Copy)]
pub struct LpTrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub hidden_size: usize,
    pub seed: u64,
}

impl Default for LpTrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            epochs: 300,
            patience: 30,
            batch_size: 256,
            hidden_size: 0, // 0 means: use the embedding size (feature_dim / 2)
            seed: 0,
        }
    }
}

/// Train the classifier with class-weighted binary cross entropy and early
/// stopping on the validation loss.
///
/// Class weights are inversely proportional to class frequencies. Examples
/// are canonically re-ordered before batching, so the result is independent
/// of input permutation.
pub fn train_lp(train: &LpDataset, val: &LpDataset, config: &LpTrainConfig) -> Result<LpModel> {
    if train.examples.is_empty() {
        return Err(Error::validation("link classifier needs training examples"));
    }
    let n_pos = train.examples.iter().filter(|e| e.label).count();
    let n_neg = train.examples.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::validation(
            "training data contains a single class, cannot fit a classifier",
        ));
    }
    let total = train.examples.len() as f64;
    let w_pos = total / (2.0 * n_pos as f64);
    let w_neg = total / (2.0 * n_neg as f64);

    let mut order: Vec<usize> = (0..train.examples.len()).collect();
    order.sort_by_key(|&i| {
        let e = &train.examples[i];
        (e.timestamp_index, e.source, e.target, e.label)
    });

    let hidden = if config.hidden_size == 0 {
        (train.feature_dim / 2).max(1)
    } else {
        config.hidden_size
    };
    let mut model = LpModel::init(train.feature_dim, hidden, config.seed);
    let mut m1 = Array2::<f64>::zeros(model.w1.raw_dim());
    let mut v1 = Array2::<f64>::zeros(model.w1.raw_dim());
    let mut mb1 = Array1::<f64>::zeros(hidden);
    let mut vb1 = Array1::<f64>::zeros(hidden);
    let mut m2 = Array1::<f64>::zeros(hidden);
    let mut v2 = Array1::<f64>::zeros(hidden);
    let (mut mb2, mut vb2) = (0.0f64, 0.0f64);
    let mut step = 0u64;

    let weighted_loss = |model: &LpModel, data: &LpDataset| -> f64 {
        if data.examples.is_empty() {
            return 0.0;
        }
        let mut sum = 0.0;
        for e in &data.examples {
            let p = model.predict(&e.features).clamp(1e-12, 1.0 - 1e-12);
            let w = if e.label { w_pos } else { w_neg };
            sum -= w * if e.label { p.ln() } else { (1.0 - p).ln() };
        }
        sum / data.examples.len() as f64
    };

    let mut best = model.clone();
    let mut best_val = f64::INFINITY;
    let mut since_best = 0usize;

    for epoch in 0..config.epochs {
        let mut shuffled = order.clone();
        let mut rng =
            ChaCha8Rng::seed_from_u64(crate::trainer::derive_seed(config.seed, 13, epoch as u64));
        for k in (1..shuffled.len()).rev() {
            let j = rng.gen_range(0..=k);
            shuffled.swap(k, j);
        }
        for batch in shuffled.chunks(config.batch_size) {
            let mut g_w1 = Array2::<f64>::zeros(model.w1.raw_dim());
            let mut g_b1 = Array1::<f64>::zeros(hidden);
            let mut g_w2 = Array1::<f64>::zeros(hidden);
            let mut g_b2 = 0.0f64;
            let scale = 1.0 / batch.len() as f64;
            for &idx in batch {
                let e = &train.examples[idx];
                let x = ndarray::ArrayView1::from(e.features.as_slice());
                let z = x.dot(&model.w1) + &model.b1;
                let h = z.mapv(|v: f64| v.max(0.0));
                let logit = h.dot(&model.w2) + model.b2;
                let p = 1.0 / (1.0 + (-logit).exp());
                let y = if e.label { 1.0 } else { 0.0 };
                let w = if e.label { w_pos } else { w_neg };
                // d(weighted BCE)/d(logit) = w * (p - y)
                let g_logit = scale * w * (p - y);
                for j in 0..hidden {
                    g_w2[j] += g_logit * h[j];
                }
                g_b2 += g_logit;
                for j in 0..hidden {
                    if z[j] > 0.0 {
                        let g_h = g_logit * model.w2[j];
                        g_b1[j] += g_h;
                        for (i, &xi) in e.features.iter().enumerate() {
                            if xi != 0.0 {
                                g_w1[(i, j)] += g_h * xi;
                            }
                        }
                    }
                }
            }
            step += 1;
            let bias1 = 1.0 - 0.9f64.powi(step as i32);
            let bias2 = 1.0 - 0.999f64.powi(step as i32);
            crate::optim::adam_update_slice(
                model.w1.as_slice_mut().unwrap(),
                g_w1.as_slice().unwrap(),
                m1.as_slice_mut().unwrap(),
                v1.as_slice_mut().unwrap(),
                config.lr,
                0.9,
                0.999,
                1e-8,
                bias1,
                bias2,
            );
            crate::optim::adam_update_slice(
                model.b1.as_slice_mut().unwrap(),
                g_b1.as_slice().unwrap(),
                mb1.as_slice_mut().unwrap(),
                vb1.as_slice_mut().unwrap(),
                config.lr,
                0.9,
                0.999,
                1e-8,
                bias1,
                bias2,
            );
            crate::optim::adam_update_slice(
                model.w2.as_slice_mut().unwrap(),
                g_w2.as_slice().unwrap(),
                m2.as_slice_mut().unwrap(),
                v2.as_slice_mut().unwrap(),
                config.lr,
                0.9,
                0.999,
                1e-8,
                bias1,
                bias2,
            );
            let mut b2_slice = [model.b2];
            let mut mb2_slice = [mb2];
            let mut vb2_slice = [vb2];
            crate::optim::adam_update_slice(
                &mut b2_slice,
                &[g_b2],
                &mut mb2_slice,
                &mut vb2_slice,
                config.lr,
                0.9,
                0.999,
                1e-8,
                bias1,
                bias2,
            );
            model.b2 = b2_slice[0];
            mb2 = mb2_slice[0];
            vb2 = vb2_slice[0];
        }

        let monitor = if val.examples.is_empty() {
            weighted_loss(&model, train)
        } else {
            weighted_loss(&model, val)
        };
        if monitor < best_val {
            best_val = monitor;
            best = model.clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > config.patience {
                break;
            }
        }
    }
    Ok(best)
}

/// Average precision of a ranked binary relevance list.
///
/// `m` is the number of relevant candidates in the evaluated set, `n` the
/// ranked-list length to consider: `AP = (1/m) * sum_{k<=n} P(k) * rel(k)`.
pub fn average_precision(ranked_rel: &[bool], m: usize, n: usize) -> f64 {
    assert!(
        m >= 1,
        "queries without relevant candidates are excluded upstream"
    );
    assert!(n <= ranked_rel.len());
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (k, &rel) in ranked_rel.iter().take(n).enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (k + 1) as f64;
        }
    }
    sum / m as f64
}

/// A candidate in one query's ranking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredCandidate {
    pub candidate: usize,
    pub score: f64,
    pub relevant: bool,
}

/// Sort by score descending, ties broken by candidate id ascending.
pub fn rank_candidates(candidates: &mut [ScoredCandidate]) {
    candidates.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.candidate.cmp(&b.candidate))
    });
}

/// AP and reciprocal rank of one ranked candidate list; `None` when the
/// query has no relevant candidate.
pub fn query_metrics(ranked: &[ScoredCandidate]) -> Option<(f64, f64)> {
    let m = ranked.iter().filter(|c| c.relevant).count();
    if m == 0 {
        return None;
    }
    let rel: Vec<bool> = ranked.iter().map(|c| c.relevant).collect();
    let ap = average_precision(&rel, m, rel.len());
    let first = ranked.iter().position(|c| c.relevant).unwrap();
    Some((ap, 1.0 / (first + 1) as f64))
}

/// MAP and MRR per timestamp plus their means over timestamps.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RankReport {
    pub per_timestamp: Vec<TimestampMetrics>,
    pub map: f64,
    pub mrr: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct TimestampMetrics {
    pub timestamp_index: usize,
    pub map: f64,
    pub mrr: f64,
    pub queries: usize,
}

/// Score and rank a dataset's examples, grouped per query node.
///
/// Undirected examples join both endpoints' candidate lists; directed
/// examples rank targets for their source node. Queries with no relevant
/// candidate are excluded.
pub fn evaluate_lp(model: &LpModel, dataset: &LpDataset) -> Result<RankReport> {
    let mut groups: BTreeMap<(usize, usize), Vec<ScoredCandidate>> = BTreeMap::new();
    for e in &dataset.examples {
        let score = model.predict(&e.features);
        groups
            .entry((e.timestamp_index, e.source))
            .or_default()
            .push(ScoredCandidate {
                candidate: e.target,
                score,
                relevant: e.label,
            });
        if !dataset.directed {
            groups
                .entry((e.timestamp_index, e.target))
                .or_default()
                .push(ScoredCandidate {
                    candidate: e.source,
                    score,
                    relevant: e.label,
                });
        }
    }
    rank_report_from_groups(groups)
}

/// Fold ranked query groups into per-timestamp and aggregate metrics.
pub fn rank_report_from_groups(
    groups: BTreeMap<(usize, usize), Vec<ScoredCandidate>>,
) -> Result<RankReport> {
    let mut per_t: BTreeMap<usize, (f64, f64, usize)> = BTreeMap::new();
    for ((t, _query), mut candidates) in groups {
        rank_candidates(&mut candidates);
        if let Some((ap, rr)) = query_metrics(&candidates) {
            let entry = per_t.entry(t).or_insert((0.0, 0.0, 0));
            entry.0 += ap;
            entry.1 += rr;
            entry.2 += 1;
        }
    }
    if per_t.is_empty() {
        return Err(Error::validation(
            "no query had a relevant candidate; nothing to rank",
        ));
    }
    let per_timestamp: Vec<TimestampMetrics> = per_t
        .into_iter()
        .map(|(t, (ap_sum, rr_sum, q))| TimestampMetrics {
            timestamp_index: t,
            map: ap_sum / q as f64,
            mrr: rr_sum / q as f64,
            queries: q,
        })
        .collect();
    let count = per_timestamp.len() as f64;
    let map = per_timestamp.iter().map(|m| m.map).sum::<f64>() / count;
    let mrr = per_timestamp.iter().map(|m| m.mrr).sum::<f64>() / count;
    Ok(RankReport {
        per_timestamp,
        map,
        mrr,
    })
}
