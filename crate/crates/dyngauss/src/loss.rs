//! Triplet contrastive loss over Gaussian embeddings and its exact analytic
//! gradients.
//!
//! The energy between two nodes is the closed-form KL divergence between
//! their diagonal Gaussians. A triplet contributes `E_pos^2 + exp(-E_neg)`,
//! summed over the triplet set: positive-pair energies are pushed to zero,
//! negative-pair energies are pushed up.
//!
//! Gradients are hand-derived (chain rule through relu, elu + 1 and the KL
//! form) rather than taped: the network is two layers deep with fixed
//! shapes, and the closed form keeps the engine dependency-free. A central
//! finite-difference verifier lives in [`crate::gradcheck`].

use std::collections::HashMap;

use ndarray::{Array1, Array2};

use crate::encoder::{
    elu, elu_prime, relu, relu_prime, EncoderParams, GaussianEmbedding, VARIANCE_EPS,
};
use crate::error::{Error, Result};
use crate::graph::NodeFeatures;
use crate::hops::TripletSet;

/// KL divergence between two diagonal Gaussians, `KL(a || b)`.
///
/// Evaluates the standard multivariate closed form specialized to diagonal
/// covariance:
/// `0.5 * [ sum(va/vb) + sum((mb - ma)^2 / vb) - L + sum(ln(vb/va)) ]`.
/// Nonnegative, and exactly zero when the two distributions coincide.
pub fn kl_divergence(a: &GaussianEmbedding, b: &GaussianEmbedding) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::contract(format!(
            "KL dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let dim = a.dim() as f64;
    let mut trace = 0.0;
    let mut maha = 0.0;
    let mut logdet = 0.0;
    for d in 0..a.dim() {
        let (va, vb) = (a.sigma2[d], b.sigma2[d]);
        if va <= 0.0 || vb <= 0.0 {
            return Err(Error::contract("KL requires positive variances"));
        }
        trace += va / vb;
        let diff = b.mu[d] - a.mu[d];
        maha += diff * diff / vb;
        logdet += (vb / va).ln();
    }
    let kl = 0.5 * (trace + maha - dim + logdet);
    if !kl.is_finite() {
        return Err(Error::numeric("kl_divergence", "non-finite divergence"));
    }
    Ok(kl)
}

/// Square-exponential loss over a triplet set, with `embeddings` indexed by
/// node id.
pub fn triplet_loss(embeddings: &[GaussianEmbedding], triplets: &TripletSet) -> Result<f64> {
    let fetch = |node: usize| -> Result<&GaussianEmbedding> {
        embeddings
            .get(node)
            .ok_or_else(|| Error::contract(format!("no embedding for node {node}")))
    };
    let mut loss = 0.0;
    for t in &triplets.triplets {
        let anchor = fetch(t.anchor)?;
        let e_pos = kl_divergence(anchor, fetch(t.positive)?)?;
        let e_neg = kl_divergence(anchor, fetch(t.negative)?)?;
        loss += e_pos * e_pos + (-e_neg).exp();
    }
    Ok(loss)
}

/// Gradient accumulator congruent with [`EncoderParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderGrads {
    pub w_hidden: Array2<f64>,
    pub b_hidden: Array1<f64>,
    pub w_mu: Array2<f64>,
    pub b_mu: Array1<f64>,
    pub w_var: Array2<f64>,
    pub b_var: Array1<f64>,
}

impl EncoderGrads {
    pub fn zeros_like(params: &EncoderParams) -> Self {
        Self {
            w_hidden: Array2::zeros(params.w_hidden.raw_dim()),
            b_hidden: Array1::zeros(params.b_hidden.raw_dim()),
            w_mu: Array2::zeros(params.w_mu.raw_dim()),
            b_mu: Array1::zeros(params.b_mu.raw_dim()),
            w_var: Array2::zeros(params.w_var.raw_dim()),
            b_var: Array1::zeros(params.b_var.raw_dim()),
        }
    }

    pub(crate) fn blocks(&self) -> [&[f64]; 6] {
        [
            self.w_hidden.as_slice().unwrap(),
            self.b_hidden.as_slice().unwrap(),
            self.w_mu.as_slice().unwrap(),
            self.b_mu.as_slice().unwrap(),
            self.w_var.as_slice().unwrap(),
            self.b_var.as_slice().unwrap(),
        ]
    }

    pub(crate) fn blocks_mut(&mut self) -> [&mut [f64]; 6] {
        [
            self.w_hidden.as_slice_mut().unwrap(),
            self.b_hidden.as_slice_mut().unwrap(),
            self.w_mu.as_slice_mut().unwrap(),
            self.b_mu.as_slice_mut().unwrap(),
            self.w_var.as_slice_mut().unwrap(),
            self.b_var.as_slice_mut().unwrap(),
        ]
    }
}

/// Loss value and exact parameter gradients for one triplet batch.
#[derive(Debug, Clone)]
pub struct LossBatch {
    pub loss: f64,
    pub grads: EncoderGrads,
}

/// Per-node forward cache for the backward pass.
struct NodeTape {
    node: usize,
    z: Array1<f64>,
    h: Array1<f64>,
    embedding: GaussianEmbedding,
    /// preactivation of the variance head
    s: Array1<f64>,
    g_mu: Array1<f64>,
    g_var: Array1<f64>,
}

fn forward_tape(params: &EncoderParams, features: &NodeFeatures, node: usize) -> Result<NodeTape> {
    let z = match features {
        NodeFeatures::OneHot { .. } => &params.w_hidden.row(node) + &params.b_hidden,
        NodeFeatures::Explicit(m) => m.row(node).dot(&params.w_hidden) + &params.b_hidden,
    };
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("hidden layer", format!("node {node}")));
    }
    let h = z.mapv(relu);
    let mu = h.dot(&params.w_mu) + &params.b_mu;
    let s = h.dot(&params.w_var) + &params.b_var;
    let sigma2 = s.mapv(|v| elu(v) + 1.0 + VARIANCE_EPS);
    if mu.iter().any(|v| !v.is_finite()) || sigma2.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("projection heads", format!("node {node}")));
    }
    let embed = params.embed_size();
    Ok(NodeTape {
        node,
        z,
        h,
        embedding: GaussianEmbedding { mu, sigma2 },
        s,
        g_mu: Array1::zeros(embed),
        g_var: Array1::zeros(embed),
    })
}

/// Add `coeff` times the KL partials to the adjoints of the pair `(a, b)`,
/// where the divergence is `KL(a || b)`.
fn accumulate_kl_partials(pair: (&mut NodeTape, &mut NodeTape), coeff: f64) {
    let (a, b) = pair;
    for d in 0..a.embedding.dim() {
        let va = a.embedding.sigma2[d];
        let vb = b.embedding.sigma2[d];
        let diff = b.embedding.mu[d] - a.embedding.mu[d];
        a.g_mu[d] += coeff * (-diff / vb);
        b.g_mu[d] += coeff * (diff / vb);
        a.g_var[d] += coeff * 0.5 * (1.0 / vb - 1.0 / va);
        b.g_var[d] += coeff * 0.5 * (1.0 / vb - va / (vb * vb) - diff * diff / (vb * vb));
    }
}

/// Forward-evaluate the batch loss without gradients.
pub fn batch_loss(
    params: &EncoderParams,
    features: &NodeFeatures,
    triplets: &TripletSet,
) -> Result<f64> {
    let mut cache: HashMap<usize, GaussianEmbedding> = HashMap::new();
    let mut loss = 0.0;
    for t in &triplets.triplets {
        for node in [t.anchor, t.positive, t.negative] {
            if let std::collections::hash_map::Entry::Vacant(slot) = cache.entry(node) {
                slot.insert(crate::encoder::encode_node(params, features, node)?);
            }
        }
        let e_pos = kl_divergence(&cache[&t.anchor], &cache[&t.positive])?;
        let e_neg = kl_divergence(&cache[&t.anchor], &cache[&t.negative])?;
        loss += e_pos * e_pos + (-e_neg).exp();
    }
    Ok(loss)
}

/// Evaluate the triplet loss through the encoder and return it with exact
/// analytic gradients for every parameter block.
///
/// Each node in the batch is encoded once; per-triplet energy coefficients
/// accumulate into per-node adjoints in triplet order, then one backward
/// pass per node (in node order) folds the adjoints into the parameter
/// gradients, so results are bit-stable for a given batch.
pub fn loss_and_grads(
    params: &EncoderParams,
    features: &NodeFeatures,
    triplets: &TripletSet,
) -> Result<LossBatch> {
    if triplets.is_empty() {
        return Err(Error::contract(
            "loss_and_grads requires a nonempty triplet set",
        ));
    }

    // forward every distinct node once
    let mut order: Vec<usize> = triplets
        .triplets
        .iter()
        .flat_map(|t| [t.anchor, t.positive, t.negative])
        .collect();
    order.sort_unstable();
    order.dedup();
    let index: HashMap<usize, usize> = order.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut tapes: Vec<NodeTape> = order
        .iter()
        .map(|&node| forward_tape(params, features, node))
        .collect::<Result<_>>()?;

    // triplet energies -> loss and per-node adjoints
    let mut loss = 0.0;
    for t in &triplets.triplets {
        let (ai, pi, ni) = (index[&t.anchor], index[&t.positive], index[&t.negative]);
        let e_pos = kl_divergence(&tapes[ai].embedding, &tapes[pi].embedding)?;
        let e_neg = kl_divergence(&tapes[ai].embedding, &tapes[ni].embedding)?;
        loss += e_pos * e_pos + (-e_neg).exp();

        // a pair with identical endpoints sits at the KL minimum where the
        // two partials cancel exactly; nothing to accumulate
        let mut accumulate = |a_idx: usize, b_idx: usize, coeff: f64| {
            if a_idx == b_idx {
                return;
            }
            let (front, back) = tapes.split_at_mut(a_idx.max(b_idx));
            let pair = if a_idx < b_idx {
                (&mut front[a_idx], &mut back[0])
            } else {
                (&mut back[0], &mut front[b_idx])
            };
            accumulate_kl_partials(pair, coeff);
        };
        accumulate(ai, pi, 2.0 * e_pos);
        accumulate(ai, ni, -(-e_neg).exp());
    }
    if !loss.is_finite() {
        return Err(Error::numeric("triplet loss", "non-finite loss"));
    }

    // backward per node
    let mut grads = EncoderGrads::zeros_like(params);
    let hidden = params.hidden_size();
    let embed = params.embed_size();
    for tape in &tapes {
        // variance head runs through elu(s) + 1
        let g_s: Array1<f64> =
            Array1::from_shape_fn(embed, |d| tape.g_var[d] * elu_prime(tape.s[d]));
        for j in 0..hidden {
            let hj = tape.h[j];
            if hj != 0.0 {
                for d in 0..embed {
                    grads.w_mu[(j, d)] += hj * tape.g_mu[d];
                    grads.w_var[(j, d)] += hj * g_s[d];
                }
            }
        }
        for d in 0..embed {
            grads.b_mu[d] += tape.g_mu[d];
            grads.b_var[d] += g_s[d];
        }
        // into the hidden layer
        let g_h = params.w_mu.dot(&tape.g_mu) + params.w_var.dot(&g_s);
        let g_z: Array1<f64> = Array1::from_shape_fn(hidden, |j| g_h[j] * relu_prime(tape.z[j]));
        match features {
            NodeFeatures::OneHot { .. } => {
                let mut row = grads.w_hidden.row_mut(tape.node);
                row += &g_z;
            }
            NodeFeatures::Explicit(m) => {
                let x = m.row(tape.node);
                for i in 0..params.input_dim() {
                    let xi = x[i];
                    if xi != 0.0 {
                        for j in 0..hidden {
                            grads.w_hidden[(i, j)] += xi * g_z[j];
                        }
                    }
                }
            }
        }
        grads.b_hidden += &g_z;
    }

    for (name, block) in EncoderParams::block_names().iter().zip(grads.blocks()) {
        if block.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric(*name, "non-finite gradient"));
        }
    }
    Ok(LossBatch { loss, grads })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::init_params;
    use crate::hops::Triplet;
    use ndarray::arr1;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn emb(mu: &[f64], sigma2: &[f64]) -> GaussianEmbedding {
        GaussianEmbedding {
            mu: arr1(mu),
            sigma2: arr1(sigma2),
        }
    }

    fn triplet_set(triplets: Vec<Triplet>) -> TripletSet {
        TripletSet {
            timestamp_index: 0,
            triplets,
            seed: 0,
        }
    }

    /// Sum of per-dimension univariate Gaussian KLs; the decomposition the
    /// diagonal closed form must match.
    fn kl_univariate_sum(a: &GaussianEmbedding, b: &GaussianEmbedding) -> f64 {
        (0..a.dim())
            .map(|d| {
                let (ma, va) = (a.mu[d], a.sigma2[d]);
                let (mb, vb) = (b.mu[d], b.sigma2[d]);
                0.5 * (va / vb + (mb - ma) * (mb - ma) / vb - 1.0 + (vb / va).ln())
            })
            .sum()
    }

    #[test]
    fn kl_of_identical_distributions_is_exactly_zero() {
        let p = emb(&[0.3, -1.2, 4.0], &[0.5, 2.0, 7.0]);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn kl_unit_shift_hand_value() {
        // 0.5 * (2 + 2 - 2 + 0) = 1
        let a = emb(&[0.0, 0.0], &[1.0, 1.0]);
        let b = emb(&[1.0, 1.0], &[1.0, 1.0]);
        assert_eq!(kl_divergence(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn kl_matches_univariate_decomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let dim = rng.gen_range(1..6);
            let gen = |rng: &mut ChaCha8Rng| {
                let mu: Vec<f64> = (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let sigma2: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.05..4.0)).collect();
                emb(&mu, &sigma2)
            };
            let a = gen(&mut rng);
            let b = gen(&mut rng);
            let kl = kl_divergence(&a, &b).unwrap();
            let oracle = kl_univariate_sum(&a, &b);
            assert!(kl >= 0.0);
            let rel = (kl - oracle).abs() / oracle.abs().max(1e-300);
            assert!(rel <= 1e-12, "kl {kl} vs oracle {oracle}");
        }
    }

    #[test]
    fn kl_dimension_mismatch_is_contract_error() {
        let a = emb(&[0.0], &[1.0]);
        let b = emb(&[0.0, 0.0], &[1.0, 1.0]);
        assert!(kl_divergence(&a, &b).is_err());
    }

    #[test]
    fn triplet_loss_zero_energies() {
        // identical embeddings: KL+ = KL- = 0, loss = 0^2 + e^0 = 1
        let e = emb(&[0.0], &[1.0]);
        let embeddings = vec![e.clone(), e.clone(), e];
        let set = triplet_set(vec![Triplet {
            anchor: 0,
            positive: 1,
            negative: 2,
            hop_pos: 1,
            hop_neg: 2,
        }]);
        assert_eq!(triplet_loss(&embeddings, &set).unwrap(), 1.0);
    }

    #[test]
    fn triplet_loss_hand_value() {
        // KL+ = 1 (unit shift), KL- = 0: loss = 1 + 1 = 2
        let anchor = emb(&[0.0, 0.0], &[1.0, 1.0]);
        let positive = emb(&[1.0, 1.0], &[1.0, 1.0]);
        let negative = anchor.clone();
        let embeddings = vec![anchor, positive, negative];
        let set = triplet_set(vec![Triplet {
            anchor: 0,
            positive: 1,
            negative: 2,
            hop_pos: 1,
            hop_neg: 2,
        }]);
        assert_eq!(triplet_loss(&embeddings, &set).unwrap(), 2.0);
    }

    #[test]
    fn loss_vanishes_as_negative_energy_grows() {
        // KL- = 200 here; with KL+ = 0 the loss is exp(-200), far below any
        // practical scale but still strictly positive
        let anchor = emb(&[0.0], &[1.0]);
        let positive = anchor.clone();
        let far = emb(&[20.0], &[1.0]);
        let embeddings = vec![anchor, positive, far];
        let set = triplet_set(vec![Triplet {
            anchor: 0,
            positive: 1,
            negative: 2,
            hop_pos: 1,
            hop_neg: 2,
        }]);
        let loss = triplet_loss(&embeddings, &set).unwrap();
        assert!(loss > 0.0 && loss < 1e-80, "loss {loss}");
    }

    #[test]
    fn missing_embedding_is_contract_error() {
        let embeddings = vec![emb(&[0.0], &[1.0])];
        let set = triplet_set(vec![Triplet {
            anchor: 0,
            positive: 1,
            negative: 0,
            hop_pos: 1,
            hop_neg: 2,
        }]);
        assert!(triplet_loss(&embeddings, &set).is_err());
    }

    #[test]
    fn dead_relu_unit_has_zero_gradient() {
        let mut params = init_params(5, 4, 3, 3);
        // unit 2 can never activate
        for i in 0..5 {
            params.w_hidden[(i, 2)] = -1.0;
        }
        params.b_hidden[2] = -10.0;
        let features = NodeFeatures::one_hot(5);
        let set = triplet_set(vec![Triplet {
            anchor: 0,
            positive: 1,
            negative: 3,
            hop_pos: 1,
            hop_neg: 2,
        }]);
        let batch = loss_and_grads(&params, &features, &set).unwrap();
        for i in 0..5 {
            assert_eq!(batch.grads.w_hidden[(i, 2)], 0.0);
        }
        assert_eq!(batch.grads.b_hidden[2], 0.0);
        // the unit's outgoing head weights see h = 0, so they are flat too
        for d in 0..3 {
            assert_eq!(batch.grads.w_mu[(2, d)], 0.0);
            assert_eq!(batch.grads.w_var[(2, d)], 0.0);
        }
    }

    #[test]
    fn duplicated_triplet_doubles_loss_and_grads() {
        let params = init_params(6, 4, 3, 5);
        let features = NodeFeatures::one_hot(6);
        let t = Triplet {
            anchor: 0,
            positive: 2,
            negative: 4,
            hop_pos: 1,
            hop_neg: 2,
        };
        let once = loss_and_grads(&params, &features, &triplet_set(vec![t])).unwrap();
        let twice = loss_and_grads(&params, &features, &triplet_set(vec![t, t])).unwrap();
        assert_eq!(twice.loss, 2.0 * once.loss);
        // adjoints interleave positive- and negative-pair terms, so gradient
        // doubling is exact up to accumulation rounding
        for (a, b) in once.grads.blocks().iter().zip(twice.grads.blocks()) {
            for (x, y) in a.iter().zip(b.iter()) {
                let scale = x.abs().max(y.abs());
                assert!(
                    (y - 2.0 * x).abs() <= 4.0 * f64::EPSILON * scale + 1e-15,
                    "{y} vs 2 * {x}"
                );
            }
        }
    }

    #[test]
    fn loss_invariant_under_triplet_permutation() {
        let params = init_params(8, 5, 3, 7);
        let features = NodeFeatures::one_hot(8);
        let mut triplets = vec![
            Triplet {
                anchor: 0,
                positive: 1,
                negative: 5,
                hop_pos: 1,
                hop_neg: 2,
            },
            Triplet {
                anchor: 2,
                positive: 3,
                negative: 6,
                hop_pos: 1,
                hop_neg: 2,
            },
            Triplet {
                anchor: 4,
                positive: 0,
                negative: 7,
                hop_pos: 1,
                hop_neg: 3,
            },
        ];
        let forward = batch_loss(&params, &features, &triplet_set(triplets.clone())).unwrap();
        triplets.reverse();
        let reversed = batch_loss(&params, &features, &triplet_set(triplets)).unwrap();
        assert!((forward - reversed).abs() <= 1e-12 * forward.abs());
    }

    #[test]
    fn gradients_match_finite_differences_small_instance() {
        let params = init_params(6, 4, 3, 11);
        let features = NodeFeatures::one_hot(6);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let triplets: Vec<Triplet> = (0..5)
            .map(|_| {
                let anchor = rng.gen_range(0..6);
                let positive = rng.gen_range(0..6);
                let negative = rng.gen_range(0..6);
                Triplet {
                    anchor,
                    positive,
                    negative,
                    hop_pos: 1,
                    hop_neg: 2,
                }
            })
            .collect();
        let set = triplet_set(triplets);
        let batch = loss_and_grads(&params, &features, &set).unwrap();
        let fd = crate::gradcheck::finite_difference_grads(&params, &features, &set, 1e-5).unwrap();
        let worst = crate::gradcheck::max_relative_error(&batch.grads, &fd, 1e-8);
        assert!(worst <= 1e-4, "max relative gradient error {worst}");
    }

    #[test]
    fn adam_steps_on_fixed_batch_decrease_loss() {
        use crate::optim::{adam_step, AdamState};
        let mut params = init_params(10, 8, 4, 21);
        let features = NodeFeatures::one_hot(10);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let triplets: Vec<Triplet> = (0..12)
            .map(|_| Triplet {
                anchor: rng.gen_range(0..10),
                positive: rng.gen_range(0..10),
                negative: rng.gen_range(0..10),
                hop_pos: 1,
                hop_neg: 2,
            })
            .collect();
        let set = triplet_set(triplets);
        let mut state = AdamState::new(&params, 1e-4);
        let mut losses = Vec::new();
        for _ in 0..10 {
            let batch = loss_and_grads(&params, &features, &set).unwrap();
            losses.push(batch.loss);
            adam_step(&mut params, &batch.grads, &mut state).unwrap();
        }
        losses.push(batch_loss(&params, &features, &set).unwrap());
        let non_monotone = losses.windows(2).filter(|w| w[1] >= w[0]).count();
        assert!(non_monotone <= 1, "loss trace {losses:?}");
        assert!(losses.last().unwrap() < losses.first().unwrap());
    }

    #[test]
    fn explicit_features_gradients_match_finite_differences() {
        let params = init_params(4, 5, 2, 17);
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let matrix = Array2::from_shape_fn((7, 4), |_| rng.gen_range(-1.0..1.0));
        let features = NodeFeatures::explicit(matrix).unwrap();
        let set = triplet_set(vec![
            Triplet {
                anchor: 0,
                positive: 1,
                negative: 2,
                hop_pos: 1,
                hop_neg: 2,
            },
            Triplet {
                anchor: 3,
                positive: 4,
                negative: 6,
                hop_pos: 1,
                hop_neg: 2,
            },
        ]);
        let batch = loss_and_grads(&params, &features, &set).unwrap();
        let fd = crate::gradcheck::finite_difference_grads(&params, &features, &set, 1e-5).unwrap();
        let worst = crate::gradcheck::max_relative_error(&batch.grads, &fd, 1e-8);
        assert!(worst <= 1e-4, "max relative gradient error {worst}");
    }
}
