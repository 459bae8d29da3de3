//! Embedding-uncertainty analysis: mean standard deviation over time, the
//! effective uncertainty dimensionality, and embedding-size selection.
//!
//! Curves for growing embedding sizes converge once the size exceeds the
//! system's effective dimensionality; the estimator makes that visual
//! criterion algorithmic with a relative gap tolerance (default 5%).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::trainer::EmbeddingStore;

/// Mean node standard deviation per timestamp for one embedding size.
#[derive(Debug, Clone, Serialize)]
pub struct UncertaintyCurve {
    pub embed_size: usize,
    pub mean_sigma: Vec<f64>,
    pub seed: u64,
}

/// Per-timestamp mean over all nodes and dimensions of `sqrt(sigma2)`.
pub fn uncertainty_curve(store: &EmbeddingStore, seed: u64) -> Result<UncertaintyCurve> {
    if store.records.is_empty() {
        return Err(Error::contract("embedding store is empty"));
    }
    let mut mean_sigma = Vec::with_capacity(store.records.len());
    for record in &store.records {
        let mut sum = 0.0;
        let mut count = 0usize;
        for embedding in &record.embeddings {
            for &v in embedding.sigma2.iter() {
                sum += v.sqrt();
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::contract(format!(
                "timestamp {} holds no embeddings",
                record.timestamp_index
            )));
        }
        mean_sigma.push(sum / count as f64);
    }
    Ok(UncertaintyCurve {
        embed_size: store.embed_size,
        mean_sigma,
        seed,
    })
}

/// Average curves of the same embedding size pointwise (the multi-seed
/// protocol averages runs before any gap is measured).
pub fn average_curves(curves: &[UncertaintyCurve]) -> Result<UncertaintyCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::contract("no curves to average"))?;
    let len = first.mean_sigma.len();
    if curves
        .iter()
        .any(|c| c.embed_size != first.embed_size || c.mean_sigma.len() != len)
    {
        return Err(Error::contract(
            "curves to average must share embedding size and length",
        ));
    }
    let mut mean_sigma = vec![0.0; len];
    for curve in curves {
        for (acc, v) in mean_sigma.iter_mut().zip(&curve.mean_sigma) {
            *acc += v;
        }
    }
    for v in &mut mean_sigma {
        *v /= curves.len() as f64;
    }
    Ok(UncertaintyCurve {
        embed_size: first.embed_size,
        mean_sigma,
        seed: 0,
    })
}

/// Estimated effective dimensionality of uncertainty.
#[derive(Debug, Clone, Serialize)]
pub struct DuEstimate {
    pub candidate_sizes: Vec<usize>,
    pub d_u: usize,
    /// Mean relative gap between each adjacent size pair, aligned with
    /// `candidate_sizes` windows.
    pub convergence_scores: Vec<f64>,
    pub tolerance: f64,
    /// Set when no size converged and the largest candidate was returned.
    pub non_converged: bool,
}

/// Estimate the smallest embedding size whose curve has converged: the gap
/// to the next size, and every later adjacent gap, falls below `tolerance`.
///
/// The gap between adjacent sizes is the mean over timestamps of
/// `|c_i(t) - c_{i+1}(t)| / c_{i+1}(t)`. Curves must already be averaged
/// over runs per size; pass one curve per size.
pub fn estimate_du(curves: &[UncertaintyCurve], tolerance: f64) -> Result<DuEstimate> {
    if curves.len() < 2 {
        return Err(Error::contract(
            "effective dimensionality needs at least two embedding sizes",
        ));
    }
    let mut sorted: Vec<&UncertaintyCurve> = curves.iter().collect();
    sorted.sort_by_key(|c| c.embed_size);
    let sizes: Vec<usize> = sorted.iter().map(|c| c.embed_size).collect();
    if sizes.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::contract("duplicate embedding sizes in curve set"));
    }
    let len = sorted[0].mean_sigma.len();
    if sorted.iter().any(|c| c.mean_sigma.len() != len) {
        return Err(Error::contract("curves cover different timestamp counts"));
    }

    let mut gaps = Vec::with_capacity(sorted.len() - 1);
    for pair in sorted.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let gap = a
            .mean_sigma
            .iter()
            .zip(&b.mean_sigma)
            .map(|(&x, &y)| (x - y).abs() / y)
            .sum::<f64>()
            / len as f64;
        gaps.push(gap);
    }

    // smallest size whose gap, and all later gaps, stay under tolerance
    let mut converged_from = None;
    for start in 0..gaps.len() {
        if gaps[start..].iter().all(|&g| g < tolerance) {
            converged_from = Some(start);
            break;
        }
    }
    let (d_u, non_converged) = match converged_from {
        Some(idx) => (sizes[idx], false),
        None => (*sizes.last().unwrap(), true),
    };
    Ok(DuEstimate {
        candidate_sizes: sizes,
        d_u,
        convergence_scores: gaps,
        tolerance,
        non_converged,
    })
}

/// Smallest candidate size at or above the estimated dimensionality.
pub fn select_embedding_size(estimate: &DuEstimate) -> usize {
    estimate
        .candidate_sizes
        .iter()
        .copied()
        .find(|&size| size >= estimate.d_u)
        .unwrap_or(estimate.d_u)
}

/// Render one curve as `timestamp,mean_std` CSV.
pub fn curve_csv(curve: &UncertaintyCurve) -> String {
    let mut out = String::from("timestamp,mean_std\n");
    for (t, v) in curve.mean_sigma.iter().enumerate() {
        out.push_str(&format!("{t},{v}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::GaussianEmbedding;
    use crate::trainer::{TimestampRecord, TrainSummary};
    use ndarray::arr1;

    fn store_with_sigma2(embed_size: usize, per_t: &[Vec<f64>]) -> EmbeddingStore {
        let records = per_t
            .iter()
            .enumerate()
            .map(|(t, sigma2)| TimestampRecord {
                timestamp_index: t,
                embeddings: vec![GaussianEmbedding {
                    mu: arr1(&vec![0.0; sigma2.len()]),
                    sigma2: arr1(sigma2),
                }],
                summary: TrainSummary {
                    final_loss: 0.0,
                    epochs_run: 1,
                    wall_seconds: 0.0,
                    epoch_losses: vec![0.0],
                    skipped: false,
                },
            })
            .collect();
        EmbeddingStore {
            embed_size,
            config_fingerprint: String::new(),
            records,
        }
    }

    fn curve(embed_size: usize, values: &[f64]) -> UncertaintyCurve {
        UncertaintyCurve {
            embed_size,
            mean_sigma: values.to_vec(),
            seed: 0,
        }
    }

    #[test]
    fn unit_variances_give_unit_curve() {
        let store = store_with_sigma2(2, &[vec![1.0, 1.0], vec![1.0, 1.0]]);
        let c = uncertainty_curve(&store, 0).unwrap();
        assert_eq!(c.mean_sigma, vec![1.0, 1.0]);
    }

    #[test]
    fn mean_std_is_mean_of_square_roots() {
        let store = store_with_sigma2(2, &[vec![4.0, 9.0]]);
        let c = uncertainty_curve(&store, 0).unwrap();
        assert_eq!(c.mean_sigma, vec![2.5]);
    }

    #[test]
    fn curve_length_matches_trained_timestamps() {
        let store = store_with_sigma2(1, &[vec![1.0], vec![2.0], vec![3.0]]);
        let c = uncertainty_curve(&store, 0).unwrap();
        assert_eq!(c.mean_sigma.len(), 3);
    }

    #[test]
    fn curve_scales_with_sigma() {
        let base = store_with_sigma2(2, &[vec![0.7, 1.3], vec![2.0, 0.4]]);
        let scaled =
            store_with_sigma2(2, &[vec![0.7 * 9.0, 1.3 * 9.0], vec![2.0 * 9.0, 0.4 * 9.0]]);
        let a = uncertainty_curve(&base, 0).unwrap();
        let b = uncertainty_curve(&scaled, 0).unwrap();
        for (x, y) in a.mean_sigma.iter().zip(&b.mean_sigma) {
            assert!((y - 3.0 * x).abs() <= 1e-12 * y.abs());
        }
    }

    #[test]
    fn plateau_at_sixty_four_is_detected() {
        let curves = vec![
            curve(16, &[3.0, 3.3, 3.1]),
            curve(32, &[2.9, 3.2, 3.0]),
            curve(64, &[1.0, 1.1, 1.05]),
            curve(128, &[1.0, 1.1, 1.05]),
            curve(256, &[1.0, 1.1, 1.05]),
        ];
        let estimate = estimate_du(&curves, 0.05).unwrap();
        assert_eq!(estimate.d_u, 64);
        assert!(!estimate.non_converged);
        assert_eq!(select_embedding_size(&estimate), 64);
    }

    #[test]
    fn identical_curves_return_smallest_size() {
        let values = [1.4, 1.2, 1.3];
        let curves: Vec<UncertaintyCurve> =
            [16, 32, 64].iter().map(|&s| curve(s, &values)).collect();
        let estimate = estimate_du(&curves, 0.05).unwrap();
        assert_eq!(estimate.d_u, 16);
    }

    #[test]
    fn non_convergence_returns_largest_with_flag() {
        let curves = vec![curve(16, &[4.0]), curve(32, &[2.0]), curve(64, &[1.0])];
        let estimate = estimate_du(&curves, 0.05).unwrap();
        assert_eq!(estimate.d_u, 64);
        assert!(estimate.non_converged);
        assert_eq!(select_embedding_size(&estimate), 64);
    }

    #[test]
    fn estimate_invariant_under_uniform_scaling() {
        let curves = vec![
            curve(16, &[3.0, 3.3]),
            curve(32, &[1.0, 1.1]),
            curve(64, &[1.0, 1.1]),
        ];
        let scaled: Vec<UncertaintyCurve> = curves
            .iter()
            .map(|c| {
                curve(
                    c.embed_size,
                    &c.mean_sigma.iter().map(|v| v * 17.0).collect::<Vec<_>>(),
                )
            })
            .collect();
        let a = estimate_du(&curves, 0.05).unwrap();
        let b = estimate_du(&scaled, 0.05).unwrap();
        assert_eq!(a.d_u, b.d_u);
        for (x, y) in a.convergence_scores.iter().zip(&b.convergence_scores) {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn single_size_is_contract_error() {
        let curves = vec![curve(16, &[1.0])];
        assert!(estimate_du(&curves, 0.05).is_err());
    }

    #[test]
    fn averaging_runs_is_pointwise() {
        let a = curve(16, &[1.0, 3.0]);
        let b = curve(16, &[3.0, 5.0]);
        let avg = average_curves(&[a, b]).unwrap();
        assert_eq!(avg.mean_sigma, vec![2.0, 4.0]);
    }
}
