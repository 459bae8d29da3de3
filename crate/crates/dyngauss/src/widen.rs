//! Function-preserving widening of the encoder input layer.
//!
//! When a snapshot brings new nodes, the input-side weight matrix (the only
//! shape that depends on the node count under one-hot features) grows: old
//! rows are copied verbatim and each new row copies a uniformly chosen old
//! row. Under one-hot inputs duplicated rows are never co-activated, so old
//! nodes keep their embeddings bit for bit while new nodes start from a
//! plausible warm state.
//!
//! A `strict_replication_scaling` mode instead divides every row by its
//! replication count, the literal wider-net transfer rule for layers whose
//! outputs fan into a next layer. It is available for comparison; it breaks
//! exact preservation here, which is why plain copying is the default.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ndarray::Array2;

use crate::encoder::EncoderParams;
use crate::error::{Error, Result};

/// The random index map used by one widening, kept for reproducibility
/// audits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WidenMap {
    /// `g[j] = j` for old rows, a uniform old index for new rows.
    pub g: Vec<usize>,
    /// How many rows (old and new) map onto each old row; all >= 1 and the
    /// counts sum to the new input size.
    pub replication_count: Vec<usize>,
    pub seed: u64,
}

/// Options for [`widen_input`].
#[derive(Debug, Clone, Copy, Default)]
pub struct WidenOptions {
    /// Divide rows by their replication count (literal transfer rule)
    /// instead of copying. Off by default; see the module docs.
    pub strict_replication_scaling: bool,
}

/// Grow the encoder input layer to `new_input_size` rows.
///
/// Shrinking is a contract error; widening to the current size returns the
/// parameters unchanged with an identity map.
pub fn widen_input(
    params: &EncoderParams,
    new_input_size: usize,
    seed: u64,
    options: WidenOptions,
) -> Result<(EncoderParams, WidenMap)> {
    let old_size = params.input_dim();
    if new_input_size < old_size {
        return Err(Error::contract(format!(
            "cannot shrink input layer from {old_size} to {new_input_size}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g: Vec<usize> = (0..old_size).collect();
    for _ in old_size..new_input_size {
        g.push(rng.gen_range(0..old_size));
    }
    let mut replication_count = vec![0usize; old_size];
    for &j in &g {
        replication_count[j] += 1;
    }
    let map = WidenMap {
        g,
        replication_count,
        seed,
    };

    if new_input_size == old_size && !options.strict_replication_scaling {
        return Ok((params.clone(), map));
    }

    let hidden = params.hidden_size();
    let mut w_hidden = Array2::zeros((new_input_size, hidden));
    for (j, &src) in map.g.iter().enumerate() {
        let scale = if options.strict_replication_scaling {
            1.0 / map.replication_count[src] as f64
        } else {
            1.0
        };
        for h in 0..hidden {
            let value = params.w_hidden[(src, h)];
            w_hidden[(j, h)] = if options.strict_replication_scaling {
                value * scale
            } else {
                value
            };
        }
    }

    let widened = EncoderParams {
        w_hidden,
        b_hidden: params.b_hidden.clone(),
        w_mu: params.w_mu.clone(),
        b_mu: params.b_mu.clone(),
        w_var: params.w_var.clone(),
        b_var: params.b_var.clone(),
        timestamp_of_origin: params.timestamp_of_origin,
    };
    Ok((widened, map))
}

/// Serialize a widen map as `new_index source_index` lines.
pub fn render_widen_map(map: &WidenMap) -> String {
    let mut out = format!("# seed = {}\n# new_index source_index\n", map.seed);
    for (j, &src) in map.g.iter().enumerate() {
        out.push_str(&format!("{j} {src}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{encode_node, init_params};
    use crate::graph::NodeFeatures;

    #[test]
    fn equal_size_returns_identity() {
        let params = init_params(5, 4, 3, 1);
        let (widened, map) = widen_input(&params, 5, 9, WidenOptions::default()).unwrap();
        assert_eq!(widened, params);
        assert_eq!(map.g, vec![0, 1, 2, 3, 4]);
        assert!(map.replication_count.iter().all(|&c| c == 1));
    }

    #[test]
    fn shrinking_is_rejected() {
        let params = init_params(5, 4, 3, 1);
        assert!(widen_input(&params, 4, 9, WidenOptions::default()).is_err());
    }

    #[test]
    fn new_rows_copy_their_mapped_source() {
        let params = init_params(2, 3, 2, 2);
        // try seeds until g(2) = 0, then check exact copy semantics
        let seed = (0..100)
            .find(|&s| {
                widen_input(&params, 3, s, WidenOptions::default())
                    .unwrap()
                    .1
                    .g[2]
                    == 0
            })
            .expect("some seed maps the new row to 0");
        let (widened, map) = widen_input(&params, 3, seed, WidenOptions::default()).unwrap();
        assert_eq!(map.g[2], 0);
        assert_eq!(widened.w_hidden.row(2), params.w_hidden.row(0));
        assert_eq!(map.replication_count, vec![2, 1]);
    }

    #[test]
    fn replication_counts_sum_to_new_size() {
        let params = init_params(4, 3, 2, 3);
        let (_, map) = widen_input(&params, 11, 5, WidenOptions::default()).unwrap();
        assert_eq!(map.replication_count.iter().sum::<usize>(), 11);
        assert!(map.replication_count.iter().all(|&c| c >= 1));
        assert!(map.g[..4].iter().enumerate().all(|(j, &s)| j == s));
        assert!(map.g[4..].iter().all(|&s| s < 4));
    }

    #[test]
    fn old_nodes_keep_embeddings_bitwise() {
        let params = init_params(6, 8, 4, 4);
        let (widened, _) = widen_input(&params, 10, 77, WidenOptions::default()).unwrap();
        let old_features = NodeFeatures::one_hot(6);
        let new_features = NodeFeatures::one_hot(10);
        for node in 0..6 {
            let before = encode_node(&params, &old_features, node).unwrap();
            let after = encode_node(&widened, &new_features, node).unwrap();
            assert_eq!(before, after, "embedding changed for node {node}");
        }
    }

    #[test]
    fn widening_twice_to_same_size_equals_once() {
        let params = init_params(3, 4, 2, 5);
        let (once, _) = widen_input(&params, 7, 21, WidenOptions::default()).unwrap();
        let (twice, map) = widen_input(&once, 7, 22, WidenOptions::default()).unwrap();
        assert_eq!(once, twice);
        assert_eq!(map.g, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn deterministic_under_seed() {
        let params = init_params(4, 4, 2, 6);
        let (a, ma) = widen_input(&params, 9, 33, WidenOptions::default()).unwrap();
        let (b, mb) = widen_input(&params, 9, 33, WidenOptions::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(ma, mb);
    }

    #[test]
    fn strict_scaling_divides_by_replication() {
        let params = init_params(2, 3, 2, 7);
        let seed = (0..100)
            .find(|&s| {
                widen_input(&params, 3, s, WidenOptions::default())
                    .unwrap()
                    .1
                    .g[2]
                    == 1
            })
            .unwrap();
        let options = WidenOptions {
            strict_replication_scaling: true,
        };
        let (widened, map) = widen_input(&params, 3, seed, options).unwrap();
        assert_eq!(map.replication_count, vec![1, 2]);
        for h in 0..3 {
            assert_eq!(widened.w_hidden[(0, h)], params.w_hidden[(0, h)]);
            assert_eq!(widened.w_hidden[(1, h)], params.w_hidden[(1, h)] / 2.0);
            assert_eq!(widened.w_hidden[(2, h)], params.w_hidden[(1, h)] / 2.0);
        }
    }
}
