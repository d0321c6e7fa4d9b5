//! Causal content encoder: waveform in, 50 Hz content representation out.

use crate::blocks::{conv, Mrf, MrfState};
use crate::config::{ArchConfig, EncoderConfig};
use crate::error::{Error, Result};
use crate::kernels::{CausalConv1d, ConvSpec, ConvState, LRELU_SLOPE};
use crate::tensor::FrameTensor;
use crate::weights::ModelWeights;

/// Speaker-independent content sequence, `hidden_dim × frames`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContentRepr {
    pub z: FrameTensor,
}

impl ContentRepr {
    pub fn frames(&self) -> usize {
        self.z.frames()
    }
}

#[derive(Debug, Clone)]
struct EncoderStage {
    mrf: Mrf,
    down: CausalConv1d,
}

#[derive(Debug, Clone)]
pub struct ContentEncoder {
    config: EncoderConfig,
    hop: usize,
    pre: CausalConv1d,
    stages: Vec<EncoderStage>,
    post: CausalConv1d,
    logits: CausalConv1d,
}

/// Per-stream encoder history.
#[derive(Debug, Clone)]
pub struct EncoderState {
    pre: ConvState,
    stages: Vec<(MrfState, ConvState)>,
    post: ConvState,
}

impl ContentEncoder {
    pub fn from_weights(w: &ModelWeights) -> Result<Self> {
        let cfg: &ArchConfig = w.config();
        let enc = cfg.encoder();
        let ch = &enc.channels;
        let pre = conv(w, "encoder.pre", ConvSpec::new(1, ch[0], 7))?;
        let mut stages = Vec::with_capacity(enc.downsample_rates.len());
        for (i, &r) in enc.downsample_rates.iter().enumerate() {
            let prefix = format!("encoder.stage{i}");
            stages.push(EncoderStage {
                mrf: Mrf::from_weights(w, &prefix, cfg, ch[i])?,
                down: conv(
                    w,
                    &format!("{prefix}.down"),
                    ConvSpec::new(ch[i], ch[i + 1], 2 * r).with_stride(r),
                )?,
            });
        }
        let h = cfg.hidden_dim;
        Ok(Self {
            hop: cfg.hop(),
            pre,
            stages,
            post: conv(w, "encoder.post", ConvSpec::new(h, h, 3))?,
            logits: conv(w, "encoder.logits", ConvSpec::new(h, cfg.num_units, 1))?,
            config: enc,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn new_state(&self) -> EncoderState {
        EncoderState {
            pre: self.pre.new_state(),
            stages: self
                .stages
                .iter()
                .map(|s| (s.mrf.new_state(), s.down.new_state()))
                .collect(),
            post: self.post.new_state(),
        }
    }

    /// Encodes whole hops of 16 kHz audio; `z` gets one frame per hop.
    pub fn encode(&self, wave: &FrameTensor, state: &mut EncoderState) -> Result<ContentRepr> {
        wave.ensure_channels(1, "encoder")?;
        if !wave.frames().is_multiple_of(self.hop) {
            return Err(Error::PartialHop {
                samples: wave.frames(),
                hop: self.hop,
            });
        }
        let mut x = self.pre.forward(wave, &mut state.pre)?;
        for (stage, (mrf_state, down_state)) in self.stages.iter().zip(state.stages.iter_mut()) {
            x = stage.mrf.forward(&x, mrf_state)?;
            x = stage.down.forward_leaky(&x, LRELU_SLOPE, down_state)?;
        }
        let z = self.post.forward_leaky(&x, LRELU_SLOPE, &mut state.post)?;
        Ok(ContentRepr { z })
    }

    /// Per-frame logits over the discrete units, `num_units × frames`.
    pub fn content_logits(&self, z: &ContentRepr) -> Result<FrameTensor> {
        let mut st = self.logits.new_state();
        self.logits.forward(&z.z, &mut st)
    }
}

/// Per-frame argmax; ties resolve to the lower unit index.
pub fn predict_units(logits: &FrameTensor) -> Result<Vec<usize>> {
    logits.ensure_finite("predict_units")?;
    Ok((0..logits.frames())
        .map(|t| {
            let mut best = 0;
            for c in 1..logits.channels() {
                if logits.get(c, t) > logits.get(best, t) {
                    best = c;
                }
            }
            best
        })
        .collect())
}
