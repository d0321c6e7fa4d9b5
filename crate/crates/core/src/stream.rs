//! Chunked end-to-end inference with bounded latency.
//!
//! A session buffers arbitrary-size input into 320-sample hops and threads
//! every stage's causal state, so the concatenated output of any sequence of
//! pushes equals one offline pass over the same samples.

use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::adapter::{AdapterState, FilmParams, VarianceControls};
use crate::decoder::{DecoderConditioning, DecoderState};
use crate::embedding::SpeakerEmbedding;
use crate::encoder::EncoderState;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::pitch::PitchTracker;
use crate::tensor::FrameTensor;

impl AsRef<Model> for Model {
    fn as_ref(&self) -> &Model {
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StreamOptions {
    pub controls: VarianceControls,
    /// Use pitch and energy measured from the input instead of predicted ones.
    pub copy_variance: bool,
}

/// Output of one push.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkResult {
    pub samples: Vec<f32>,
    /// Wall-clock time spent inside the call.
    pub processing_time: Duration,
}

impl ChunkResult {
    pub fn processing_secs(&self) -> f64 {
        self.processing_time.as_secs_f64()
    }
}

/// Per-stream state. `M` is any handle to a shared model (`Arc<Model>`,
/// `&Model`). A session must not be used from two threads at once; separate
/// sessions are independent.
#[derive(Debug)]
pub struct StreamSession<M: AsRef<Model> = Arc<Model>> {
    model: M,
    pseudo: SpeakerEmbedding,
    options: StreamOptions,
    film: FilmParams,
    cond: DecoderConditioning,
    encoder: EncoderState,
    adapter: AdapterState,
    decoder: DecoderState,
    tracker: Option<PitchTracker>,
    residual: Vec<f32>,
    samples_in: u64,
    samples_out: u64,
    closed: bool,
}

/// Opens a session with default options.
pub fn open_stream<M: AsRef<Model>>(
    model: M,
    pseudo: SpeakerEmbedding,
    controls: VarianceControls,
) -> Result<StreamSession<M>> {
    StreamSession::open(
        model,
        pseudo,
        StreamOptions {
            controls,
            ..Default::default()
        },
    )
}

impl<M: AsRef<Model>> StreamSession<M> {
    pub fn open(model: M, pseudo: SpeakerEmbedding, options: StreamOptions) -> Result<Self> {
        options.controls.validate()?;
        let m = model.as_ref();
        if pseudo.dim() != m.embed_dim() {
            return Err(Error::dim(
                "open_stream",
                format!(
                    "embedding has {} values, model expects {}",
                    pseudo.dim(),
                    m.embed_dim()
                ),
            ));
        }
        let film = m.adapter.film(&pseudo)?;
        let cond = m.decoder.conditioning(&pseudo)?;
        let hop = m.config().hop();
        Ok(Self {
            film,
            cond,
            encoder: m.encoder.new_state(),
            adapter: m.adapter.new_state(),
            decoder: m.decoder.new_state(),
            tracker: options.copy_variance.then(PitchTracker::new),
            residual: Vec::with_capacity(hop),
            samples_in: 0,
            samples_out: 0,
            closed: false,
            pseudo,
            options,
            model,
        })
    }

    pub fn model(&self) -> &Model {
        self.model.as_ref()
    }

    pub fn pseudo_embedding(&self) -> &SpeakerEmbedding {
        &self.pseudo
    }

    pub fn options(&self) -> &StreamOptions {
        &self.options
    }

    pub fn samples_in(&self) -> u64 {
        self.samples_in
    }

    pub fn samples_out(&self) -> u64 {
        self.samples_out
    }

    /// Samples waiting for the rest of their hop.
    pub fn buffered(&self) -> usize {
        self.residual.len()
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    fn hop(&self) -> usize {
        self.model.as_ref().config().hop()
    }

    /// Feeds any number of samples; emits audio for every completed hop.
    pub fn push_chunk(&mut self, samples: &[f32]) -> Result<ChunkResult> {
        let start = Instant::now();
        if self.closed {
            return Err(Error::SessionClosed);
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                layer: "push_chunk".into(),
            });
        }
        let hop = self.hop();
        self.samples_in += samples.len() as u64;
        let total = self.residual.len() + samples.len();
        let ready = total / hop * hop;
        let out = if ready == 0 {
            self.residual.extend_from_slice(samples);
            Vec::new()
        } else {
            let mut wave = Vec::with_capacity(ready);
            wave.extend_from_slice(&self.residual);
            let used = ready - self.residual.len();
            wave.extend_from_slice(&samples[..used]);
            self.residual.clear();
            self.residual.extend_from_slice(&samples[used..]);
            self.process(wave)?
        };
        Ok(ChunkResult {
            samples: out,
            processing_time: start.elapsed(),
        })
    }

    /// Zero-pads any buffered remainder to a full hop, emits it, and closes
    /// the session.
    pub fn flush(&mut self) -> Result<Vec<f32>> {
        if self.closed {
            return Err(Error::SessionClosed);
        }
        self.closed = true;
        if self.residual.is_empty() {
            return Ok(Vec::new());
        }
        let mut wave = std::mem::take(&mut self.residual);
        wave.resize(self.hop(), 0.0);
        self.process(wave)
    }

    fn process(&mut self, wave: Vec<f32>) -> Result<Vec<f32>> {
        let model = self.model.as_ref();
        let track = self.tracker.as_mut().map(|t| t.push(&wave));
        let x = FrameTensor::from_samples(wave);
        let z = model.encoder.encode(&x, &mut self.encoder)?;
        let zv = model.adapter.forward(
            &z.z,
            &self.film,
            &self.options.controls,
            track.as_ref(),
            &mut self.adapter,
        )?;
        let y = model.decoder.decode(&zv, &self.cond, &mut self.decoder)?;
        self.samples_out += y.frames() as u64;
        Ok(y.into_vec())
    }
}

/// Reference single-pass run. Input is zero-padded to a whole hop, matching
/// what `flush` does for a stream.
pub fn offline_run(
    model: &Model,
    pseudo: &SpeakerEmbedding,
    options: StreamOptions,
    samples: &[f32],
) -> Result<Vec<f32>> {
    let hop = model.config().hop();
    let mut padded = samples.to_vec();
    padded.resize(samples.len().div_ceil(hop) * hop, 0.0);
    let mut session = StreamSession::open(model, pseudo.clone(), options)?;
    let mut out = session.push_chunk(&padded)?.samples;
    out.extend(session.flush()?);
    Ok(out)
}
