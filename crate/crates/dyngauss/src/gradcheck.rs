//! Central finite-difference gradient verification.
//!
//! Used by the test suites to check the analytic gradients; relies only on
//! forward loss evaluations, never on the backward pass it verifies.

use crate::encoder::EncoderParams;
use crate::error::Result;
use crate::graph::NodeFeatures;
use crate::hops::TripletSet;
use crate::loss::{batch_loss, EncoderGrads};

/// Gradients estimated by central differences with the given step.
pub fn finite_difference_grads(
    params: &EncoderParams,
    features: &NodeFeatures,
    triplets: &TripletSet,
    step: f64,
) -> Result<EncoderGrads> {
    let mut work = params.clone();
    let mut grads = EncoderGrads::zeros_like(params);
    for block in 0..6 {
        let len = work.blocks()[block].len();
        for i in 0..len {
            let original = work.blocks()[block][i];
            work.blocks_mut()[block][i] = original + step;
            let plus = batch_loss(&work, features, triplets)?;
            work.blocks_mut()[block][i] = original - step;
            let minus = batch_loss(&work, features, triplets)?;
            work.blocks_mut()[block][i] = original;
            grads.blocks_mut()[block][i] = (plus - minus) / (2.0 * step);
        }
    }
    Ok(grads)
}

/// Largest relative discrepancy between two gradient sets, with an absolute
/// floor below which entries count as equal.
pub fn max_relative_error(analytic: &EncoderGrads, numeric: &EncoderGrads, floor: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for (a_block, n_block) in analytic.blocks().iter().zip(numeric.blocks()) {
        for (&a, &n) in a_block.iter().zip(n_block.iter()) {
            let diff = (a - n).abs();
            if diff <= floor {
                continue;
            }
            worst = worst.max(diff / a.abs().max(n.abs()).max(floor));
        }
    }
    worst
}
