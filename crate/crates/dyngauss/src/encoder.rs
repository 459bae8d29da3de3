//! Stochastic node encoder: one hidden layer plus two projection heads
//! mapping a feature row to the mean and variance vectors of a diagonal
//! Gaussian embedding.
//!
//! The hidden layer uses relu; the variance head passes through `elu + 1`
//! (plus a tiny floor) so every variance component stays strictly positive.

use ndarray::{Array1, Array2, ArrayView1};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::NodeFeatures;

/// Floor added to the variance head output, preventing log/division blowup
/// for saturated activations.
pub const VARIANCE_EPS: f64 = 1e-14;

pub(crate) fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Subgradient at 0 is taken as 0.
pub(crate) fn relu_prime(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

pub(crate) fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp() - 1.0
    }
}

/// Derivative at 0 is taken as 1 (the two one-sided limits agree).
pub(crate) fn elu_prime(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        x.exp()
    }
}

/// Weights and biases of the encoder and its two projection heads.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub w_hidden: Array2<f64>,
    pub b_hidden: Array1<f64>,
    pub w_mu: Array2<f64>,
    pub b_mu: Array1<f64>,
    pub w_var: Array2<f64>,
    pub b_var: Array1<f64>,
    pub timestamp_of_origin: usize,
}

impl EncoderParams {
    /// Input feature dimension D (rows of the hidden weight matrix).
    pub fn input_dim(&self) -> usize {
        self.w_hidden.nrows()
    }

    pub fn hidden_size(&self) -> usize {
        self.w_hidden.ncols()
    }

    pub fn embed_size(&self) -> usize {
        self.w_mu.ncols()
    }

    /// The six parameter blocks as flat slices, in a fixed order.
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

    pub(crate) fn block_names() -> [&'static str; 6] {
        ["w_hidden", "b_hidden", "w_mu", "b_mu", "w_var", "b_var"]
    }
}

/// Initialize parameters: weights from a zero-mean uniform distribution
/// scaled by `1/sqrt(fan_in)`, biases zero. Deterministic under `seed`.
pub fn init_params(input_dim: usize, hidden: usize, embed: usize, seed: u64) -> EncoderParams {
    assert!(input_dim >= 1 && hidden >= 1 && embed >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample = |rows: usize, cols: usize| {
        let scale = 1.0 / (rows as f64).sqrt();
        let dist = Uniform::new(-scale, scale);
        Array2::from_shape_fn((rows, cols), |_| dist.sample(&mut rng))
    };
    let w_hidden = sample(input_dim, hidden);
    let w_mu = sample(hidden, embed);
    let w_var = sample(hidden, embed);
    EncoderParams {
        w_hidden,
        b_hidden: Array1::zeros(hidden),
        w_mu,
        b_mu: Array1::zeros(embed),
        w_var,
        b_var: Array1::zeros(embed),
        timestamp_of_origin: 0,
    }
}

/// A node's latent Gaussian: mean vector and the diagonal of its covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianEmbedding {
    pub mu: Array1<f64>,
    pub sigma2: Array1<f64>,
}

impl GaussianEmbedding {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

fn check_finite(values: &Array1<f64>, layer: &str) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric(layer, "non-finite activation"));
    }
    Ok(())
}

fn heads_from_hidden(params: &EncoderParams, h: &Array1<f64>) -> Result<GaussianEmbedding> {
    let mu = h.dot(&params.w_mu) + &params.b_mu;
    check_finite(&mu, "mu head")?;
    let s = h.dot(&params.w_var) + &params.b_var;
    let sigma2 = s.mapv(|v| elu(v) + 1.0 + VARIANCE_EPS);
    check_finite(&sigma2, "var head")?;
    Ok(GaussianEmbedding { mu, sigma2 })
}

/// Encode a dense feature row.
pub fn encode(params: &EncoderParams, x: ArrayView1<f64>) -> Result<GaussianEmbedding> {
    if x.len() != params.input_dim() {
        return Err(Error::contract(format!(
            "feature row has length {}, encoder expects {}",
            x.len(),
            params.input_dim()
        )));
    }
    let z = x.dot(&params.w_hidden) + &params.b_hidden;
    check_finite(&z, "hidden layer")?;
    let h = z.mapv(relu);
    heads_from_hidden(params, &h)
}

/// Encode one node. In one-hot mode the hidden preactivation is the node's
/// weight row, read directly instead of through a dense multiply; the result
/// matches [`encode`] on the corresponding basis vector.
pub fn encode_node(
    params: &EncoderParams,
    features: &NodeFeatures,
    node: usize,
) -> Result<GaussianEmbedding> {
    if node >= features.row_count() {
        return Err(Error::contract(format!(
            "node {node} out of range, features cover {} rows",
            features.row_count()
        )));
    }
    match features {
        NodeFeatures::OneHot { .. } => {
            let z = &params.w_hidden.row(node) + &params.b_hidden;
            check_finite(&z, "hidden layer")?;
            let h = z.mapv(relu);
            heads_from_hidden(params, &h)
        }
        NodeFeatures::Explicit(matrix) => encode(params, matrix.row(node)),
    }
}
