//! Adam with bias correction, and patience-based early stopping.

use crate::encoder::EncoderParams;
use crate::error::{Error, Result};
use crate::loss::EncoderGrads;

/// Adam optimizer state for the encoder parameter blocks.
#[derive(Debug, Clone)]
pub struct AdamState {
    first_moment: EncoderGrads,
    second_moment: EncoderGrads,
    pub step_count: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(params: &EncoderParams, lr: f64) -> Self {
        Self {
            first_moment: EncoderGrads::zeros_like(params),
            second_moment: EncoderGrads::zeros_like(params),
            step_count: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    /// Flat view of both moment buffers, for fingerprinting.
    pub(crate) fn moment_blocks(&self) -> Vec<&[f64]> {
        self.first_moment
            .blocks()
            .into_iter()
            .chain(self.second_moment.blocks())
            .collect()
    }
}

/// One Adam update over every parameter block, in place.
pub fn adam_step(
    params: &mut EncoderParams,
    grads: &EncoderGrads,
    state: &mut AdamState,
) -> Result<()> {
    state.step_count += 1;
    let t = state.step_count;
    let bias1 = 1.0 - state.beta1.powi(t as i32);
    let bias2 = 1.0 - state.beta2.powi(t as i32);
    let mut param_blocks = params.blocks_mut();
    let grad_blocks = grads.blocks();
    let mut m_blocks = state.first_moment.blocks_mut();
    let mut v_blocks = state.second_moment.blocks_mut();
    for block in 0..6 {
        let p = &mut param_blocks[block];
        let g = grad_blocks[block];
        if p.len() != g.len() {
            return Err(Error::contract(format!(
                "gradient block {} has {} entries, parameters have {}",
                block,
                g.len(),
                p.len()
            )));
        }
        let m = &mut m_blocks[block];
        let v = &mut v_blocks[block];
        adam_update_slice(
            p,
            g,
            m,
            v,
            state.lr,
            state.beta1,
            state.beta2,
            state.eps,
            bias1,
            bias2,
        );
    }
    Ok(())
}

/// Shared Adam kernel over flat slices; also used by the link-prediction
/// classifier.
#[allow(clippy::too_many_arguments)]
pub(crate) fn adam_update_slice(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    bias1: f64,
    bias2: f64,
) {
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        let m_hat = m[i] / bias1;
        let v_hat = v[i] / bias2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// Whether a training loop should keep going.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Stop,
}

/// Early stopping on the training loss: stop once the loss has not improved
/// for more than `patience` consecutive epochs.
#[derive(Debug, Clone)]
pub struct EarlyStop {
    pub patience: usize,
    pub best_loss: f64,
    pub epochs_since_best: usize,
}

impl EarlyStop {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best_loss: f64::INFINITY,
            epochs_since_best: 0,
        }
    }

    pub fn update(&mut self, epoch_loss: f64) -> StopDecision {
        if epoch_loss < self.best_loss {
            self.best_loss = epoch_loss;
            self.epochs_since_best = 0;
        } else {
            self.epochs_since_best += 1;
        }
        if self.epochs_since_best > self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }
}
