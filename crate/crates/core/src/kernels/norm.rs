//! Normalizations. Instance normalization is made causal by accumulating
//! statistics from the start of the stream.

use crate::error::{Error, Result};
use crate::tensor::FrameTensor;

/// Variance floor for every normalization.
pub const NORM_EPS: f32 = 1e-5;

/// Per-channel running mean and sum of squared deviations (Welford), so a
/// constant channel yields exactly zero variance.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeNormState {
    mean: Vec<f64>,
    m2: Vec<f64>,
    count: u64,
}

impl CumulativeNormState {
    pub fn new(channels: usize) -> Self {
        Self {
            mean: vec![0.0; channels],
            m2: vec![0.0; channels],
            count: 0,
        }
    }

    pub fn channels(&self) -> usize {
        self.mean.len()
    }

    /// Frames seen so far.
    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self, c: usize) -> f64 {
        self.mean[c]
    }

    /// Population variance over the frames seen so far.
    pub fn variance(&self, c: usize) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.m2[c] / self.count as f64
        }
    }
}

/// Normalizes frame `t` of each channel by the mean and variance of frames
/// `[0, t]` of the stream.
pub fn causal_instance_norm(
    x: &FrameTensor,
    state: &mut CumulativeNormState,
    eps: f32,
) -> Result<FrameTensor> {
    if state.channels() != x.channels() {
        return Err(Error::dim(
            "causal_instance_norm",
            format!("state has {} channels, input {}", state.channels(), x.channels()),
        ));
    }
    x.ensure_finite("causal_instance_norm")?;
    let (channels, frames) = (x.channels(), x.frames());
    let mut out = FrameTensor::zeros(channels, frames);
    let eps = eps as f64;
    for t in 0..frames {
        let n = (state.count + 1) as f64;
        for c in 0..channels {
            let v = x.get(c, t) as f64;
            let delta = v - state.mean[c];
            state.mean[c] += delta / n;
            state.m2[c] += delta * (v - state.mean[c]);
            let var = (state.m2[c] / n).max(0.0);
            let y = (v - state.mean[c]) / (var + eps).sqrt();
            out.set(c, t, y as f32);
        }
        state.count += 1;
    }
    Ok(out)
}

/// Per-frame normalization across channels with learned gain and bias.
pub fn layer_norm_frame(x: &FrameTensor, gain: &[f32], bias: &[f32], eps: f32) -> Result<FrameTensor> {
    let channels = x.channels();
    if gain.len() != channels || bias.len() != channels {
        return Err(Error::dim(
            "layer_norm_frame",
            format!(
                "gain/bias of {}/{} for {channels} channels",
                gain.len(),
                bias.len()
            ),
        ));
    }
    x.ensure_finite("layer_norm_frame")?;
    let frames = x.frames();
    let mut out = FrameTensor::zeros(channels, frames);
    let eps = eps as f64;
    for t in 0..frames {
        let (mut mean, mut m2) = (0.0f64, 0.0f64);
        for c in 0..channels {
            let v = x.get(c, t) as f64;
            let delta = v - mean;
            mean += delta / (c + 1) as f64;
            m2 += delta * (v - mean);
        }
        let inv = 1.0 / (m2 / channels as f64 + eps).sqrt();
        for c in 0..channels {
            let y = (x.get(c, t) as f64 - mean) * inv;
            out.set(c, t, (y * gain[c] as f64 + bias[c] as f64) as f32);
        }
    }
    Ok(out)
}
