//! Causal waveform decoder with per-stage speaker modulation.

use crate::adapter::{FilmParams, SpeakerFilm};
use crate::blocks::{conv, Mrf, MrfState};
use crate::config::DecoderConfig;
use crate::embedding::SpeakerEmbedding;
use crate::error::Result;
use crate::kernels::{CausalConv1d, CausalUpsampleConv1d, ConvSpec, ConvState, LRELU_SLOPE};
use crate::tensor::FrameTensor;
use crate::weights::ModelWeights;

/// Largest `f32` strictly below 1; output samples are clamped to it.
pub const MAX_SAMPLE: f32 = 1.0 - f32::EPSILON / 2.0;

#[derive(Debug, Clone)]
struct DecoderStage {
    up: CausalUpsampleConv1d,
    mrf: Mrf,
    film: SpeakerFilm,
}

#[derive(Debug, Clone)]
pub struct Decoder {
    config: DecoderConfig,
    pre: CausalConv1d,
    stages: Vec<DecoderStage>,
    post: CausalConv1d,
}

/// Speaker modulation for every stage, derived once from an embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderConditioning {
    pub stages: Vec<FilmParams>,
}

#[derive(Debug, Clone)]
pub struct DecoderState {
    pre: ConvState,
    stages: Vec<(ConvState, MrfState)>,
    post: ConvState,
}

impl Decoder {
    pub fn from_weights(w: &ModelWeights) -> Result<Self> {
        let cfg = w.config();
        let dec = cfg.decoder();
        let ch = &dec.channels;
        let h = cfg.hidden_dim;
        let mut stages = Vec::with_capacity(dec.upsample_rates.len());
        for (i, &u) in dec.upsample_rates.iter().enumerate() {
            let prefix = format!("decoder.stage{i}");
            let name = format!("{prefix}.up");
            let weight = w.get(&format!("{name}.weight"))?;
            let bias = w.get(&format!("{name}.bias"))?;
            stages.push(DecoderStage {
                up: CausalUpsampleConv1d::new(
                    &name,
                    ConvSpec::new(ch[i], ch[i + 1], 2 * u),
                    u,
                    &weight.data,
                    Some(&bias.data),
                )?,
                mrf: Mrf::from_weights(w, &prefix, cfg, ch[i + 1])?,
                film: SpeakerFilm::from_weights(w, &format!("{prefix}.film"), ch[i + 1])?,
            });
        }
        Ok(Self {
            pre: conv(w, "decoder.pre", ConvSpec::new(h, h, 7))?,
            stages,
            post: conv(w, "decoder.post", ConvSpec::new(*ch.last().unwrap(), 1, 7))?,
            config: dec,
        })
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    pub fn conditioning(&self, emb: &SpeakerEmbedding) -> Result<DecoderConditioning> {
        Ok(DecoderConditioning {
            stages: self
                .stages
                .iter()
                .map(|s| s.film.params(emb))
                .collect::<Result<_>>()?,
        })
    }

    pub fn new_state(&self) -> DecoderState {
        DecoderState {
            pre: self.pre.new_state(),
            stages: self
                .stages
                .iter()
                .map(|s| (s.up.new_state(), s.mrf.new_state()))
                .collect(),
            post: self.post.new_state(),
        }
    }

    /// `hidden_dim × T` frames in, `1 × 320·T` samples in (−1, 1) out.
    pub fn decode(
        &self,
        z: &FrameTensor,
        cond: &DecoderConditioning,
        state: &mut DecoderState,
    ) -> Result<FrameTensor> {
        let mut x = self.pre.forward(z, &mut state.pre)?;
        for ((stage, film), (up_state, mrf_state)) in
            self.stages.iter().zip(&cond.stages).zip(state.stages.iter_mut())
        {
            x = stage.up.forward_leaky(&x, LRELU_SLOPE, up_state)?;
            x = stage.mrf.forward(&x, mrf_state)?;
            film.apply(&mut x)?;
        }
        let mut y = self.post.forward_leaky(&x, LRELU_SLOPE, &mut state.post)?;
        for v in y.data_mut() {
            *v = v.tanh().clamp(-MAX_SAMPLE, MAX_SAMPLE);
        }
        Ok(y)
    }
}
