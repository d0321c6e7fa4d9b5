//! Speaker and variance adaptation of the content representation.

use crate::blocks::{add_in_place, conv};
use crate::config::ArchConfig;
use crate::embedding::SpeakerEmbedding;
use crate::error::{Error, Result};
use crate::kernels::{causal_instance_norm, layer_norm_frame, CausalConv1d, ConvSpec, ConvState};
use crate::kernels::{CumulativeNormState, NORM_EPS};
use crate::tensor::FrameTensor;
use crate::weights::ModelWeights;

/// Per-channel affine modulation derived from a speaker embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct FilmParams {
    pub scale: Vec<f32>,
    pub shift: Vec<f32>,
}

impl FilmParams {
    pub fn identity(channels: usize) -> Self {
        Self {
            scale: vec![1.0; channels],
            shift: vec![0.0; channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.scale.len()
    }

    /// `x[c, t] ← x[c, t]·scale[c] + shift[c]`
    pub fn apply(&self, x: &mut FrameTensor) -> Result<()> {
        x.ensure_channels(self.channels(), "film")?;
        for c in 0..x.channels() {
            let (s, b) = (self.scale[c], self.shift[c]);
            for v in x.row_mut(c) {
                *v = *v * s + b;
            }
        }
        Ok(())
    }
}

/// Two kernel-1 convolutions from the embedding to scale and shift vectors.
#[derive(Debug, Clone)]
pub struct SpeakerFilm {
    scale: CausalConv1d,
    shift: CausalConv1d,
}

impl SpeakerFilm {
    pub(crate) fn from_weights(w: &ModelWeights, prefix: &str, channels: usize) -> Result<Self> {
        let spec = ConvSpec::new(w.config().embed_dim, channels, 1);
        Ok(Self {
            scale: conv(w, &format!("{prefix}.scale"), spec)?,
            shift: conv(w, &format!("{prefix}.shift"), spec)?,
        })
    }

    pub fn embed_dim(&self) -> usize {
        self.scale.spec().in_channels
    }

    pub fn params(&self, emb: &SpeakerEmbedding) -> Result<FilmParams> {
        if emb.dim() != self.embed_dim() {
            return Err(Error::dim(
                self.scale.name(),
                format!(
                    "embedding has {} values, expected {}",
                    emb.dim(),
                    self.embed_dim()
                ),
            ));
        }
        let e = FrameTensor::from_vec(emb.dim(), 1, emb.values().to_vec())?;
        let scale = self.scale.forward(&e, &mut self.scale.new_state())?;
        let shift = self.shift.forward(&e, &mut self.shift.new_state())?;
        Ok(FilmParams {
            scale: scale.into_vec(),
            shift: shift.into_vec(),
        })
    }
}

/// Causal adaptive instance normalization: normalize with stream-cumulative
/// statistics, then modulate with the speaker's scale and shift.
pub fn speaker_adapt(
    z: &FrameTensor,
    film: &FilmParams,
    norm_state: &mut CumulativeNormState,
) -> Result<FrameTensor> {
    if film.channels() != z.channels() {
        return Err(Error::dim(
            "speaker_adapt",
            format!("film has {} channels, z has {}", film.channels(), z.channels()),
        ));
    }
    let mut out = causal_instance_norm(z, norm_state, NORM_EPS)?;
    film.apply(&mut out)?;
    Ok(out)
}

/// Pitch and energy per 50 Hz frame. Pitch is natural-log F0 with 0 for
/// unvoiced frames; energy is log RMS.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VarianceTrack {
    pub pitch: Vec<f32>,
    pub energy: Vec<f32>,
}

impl VarianceTrack {
    pub fn len(&self) -> usize {
        self.pitch.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pitch.is_empty()
    }

    pub fn extend(&mut self, other: &VarianceTrack) {
        self.pitch.extend_from_slice(&other.pitch);
        self.energy.extend_from_slice(&other.energy);
    }
}

/// User-facing prosody modification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceControls {
    pub pitch_shift_semitones: f32,
    pub pitch_scale: f32,
    pub energy_scale: f32,
}

impl Default for VarianceControls {
    fn default() -> Self {
        Self {
            pitch_shift_semitones: 0.0,
            pitch_scale: 1.0,
            energy_scale: 1.0,
        }
    }
}

impl VarianceControls {
    pub fn validate(&self) -> Result<()> {
        if !self.pitch_shift_semitones.is_finite() {
            return Err(Error::InvalidArgument("pitch shift must be finite".into()));
        }
        for (name, v) in [
            ("pitch_scale", self.pitch_scale),
            ("energy_scale", self.energy_scale),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::default()
    }
}

/// Running mean of voiced, shifted log-F0 values seen so far in the stream.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PitchControlState {
    sum: f64,
    voiced: u64,
}

impl PitchControlState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn voiced_frames(&self) -> u64 {
        self.voiced
    }
}

/// Applies the controls to a pitch track. Voiced frames (`p > 0`) get
/// `shift·ln2/12` added, then are scaled about the running mean of voiced
/// frames up to and including the current one. Unvoiced frames pass through.
pub fn transform_pitch(
    pitch: &[f32],
    controls: &VarianceControls,
    state: &mut PitchControlState,
) -> Vec<f32> {
    let offset = controls.pitch_shift_semitones * std::f32::consts::LN_2 / 12.0;
    let shift = controls.pitch_shift_semitones != 0.0;
    let scale = controls.pitch_scale != 1.0;
    pitch
        .iter()
        .map(|&p| {
            if p <= 0.0 {
                return p;
            }
            let s = if shift { p + offset } else { p };
            state.sum += s as f64;
            state.voiced += 1;
            if scale {
                let mean = state.sum / state.voiced as f64;
                (mean + (s as f64 - mean) * controls.pitch_scale as f64) as f32
            } else {
                s
            }
        })
        .collect()
}

/// Conv stack that predicts one scalar per frame, plus the kernel-1
/// projection that injects that scalar back into the hidden space.
#[derive(Debug, Clone)]
pub struct VariancePredictor {
    conv1: CausalConv1d,
    norm1: (Vec<f32>, Vec<f32>),
    conv2: CausalConv1d,
    norm2: (Vec<f32>, Vec<f32>),
    out: CausalConv1d,
    mean: f32,
    std: f32,
    proj: CausalConv1d,
}

#[derive(Debug, Clone)]
pub struct PredictorState {
    conv1: ConvState,
    conv2: ConvState,
}

impl VariancePredictor {
    pub(crate) fn from_weights(w: &ModelWeights, prefix: &str) -> Result<Self> {
        let cfg: &ArchConfig = w.config();
        let (h, p, k) = (cfg.hidden_dim, cfg.predictor_channels, cfg.predictor_kernel_size);
        let norm = |name: &str| -> Result<(Vec<f32>, Vec<f32>)> {
            Ok((
                w.get(&format!("{prefix}.{name}.gain"))?.data.clone(),
                w.get(&format!("{prefix}.{name}.bias"))?.data.clone(),
            ))
        };
        let stats = &w.get(&format!("{prefix}.stats"))?.data;
        Ok(Self {
            conv1: conv(w, &format!("{prefix}.conv1"), ConvSpec::new(h, p, k))?,
            norm1: norm("norm1")?,
            conv2: conv(w, &format!("{prefix}.conv2"), ConvSpec::new(p, p, k))?,
            norm2: norm("norm2")?,
            out: conv(w, &format!("{prefix}.out"), ConvSpec::new(p, 1, 1))?,
            mean: stats[0],
            std: stats[1],
            proj: conv(w, &format!("{prefix}.proj"), ConvSpec::new(1, h, 1))?,
        })
    }

    pub fn new_state(&self) -> PredictorState {
        PredictorState {
            conv1: self.conv1.new_state(),
            conv2: self.conv2.new_state(),
        }
    }

    /// One de-standardized value per frame of `z`.
    pub fn predict(&self, z: &FrameTensor, state: &mut PredictorState) -> Result<Vec<f32>> {
        let mut x = self.conv1.forward(z, &mut state.conv1)?;
        relu_in_place(&mut x);
        let x = layer_norm_frame(&x, &self.norm1.0, &self.norm1.1, NORM_EPS)?;
        let mut x = self.conv2.forward(&x, &mut state.conv2)?;
        relu_in_place(&mut x);
        let x = layer_norm_frame(&x, &self.norm2.0, &self.norm2.1, NORM_EPS)?;
        let y = self.out.forward(&x, &mut self.out.new_state())?;
        Ok(y.into_vec()
            .into_iter()
            .map(|v| v * self.std + self.mean)
            .collect())
    }

    /// Projects a per-frame scalar track to `hidden_dim × frames`.
    pub fn project(&self, track: &[f32]) -> Result<FrameTensor> {
        let x = FrameTensor::from_vec(1, track.len(), track.to_vec())?;
        self.proj.forward(&x, &mut self.proj.new_state())
    }
}

fn relu_in_place(x: &mut FrameTensor) {
    for v in x.data_mut() {
        *v = v.max(0.0);
    }
}

/// Speaker conditioning followed by pitch and energy injection.
#[derive(Debug, Clone)]
pub struct SpeakerAdapter {
    hidden_dim: usize,
    film: SpeakerFilm,
    pitch: VariancePredictor,
    energy: VariancePredictor,
}

/// Per-stream adapter state.
#[derive(Debug, Clone)]
pub struct AdapterState {
    pub norm: CumulativeNormState,
    pub pitch: PredictorState,
    pub energy: PredictorState,
    pub controls: PitchControlState,
}

impl SpeakerAdapter {
    pub fn from_weights(w: &ModelWeights) -> Result<Self> {
        let h = w.config().hidden_dim;
        Ok(Self {
            hidden_dim: h,
            film: SpeakerFilm::from_weights(w, "adapter.speaker", h)?,
            pitch: VariancePredictor::from_weights(w, "adapter.pitch")?,
            energy: VariancePredictor::from_weights(w, "adapter.energy")?,
        })
    }

    pub fn new_state(&self) -> AdapterState {
        AdapterState {
            norm: CumulativeNormState::new(self.hidden_dim),
            pitch: self.pitch.new_state(),
            energy: self.energy.new_state(),
            controls: PitchControlState::new(),
        }
    }

    /// Speaker scale/shift for `emb`; computed once per session.
    pub fn film(&self, emb: &SpeakerEmbedding) -> Result<FilmParams> {
        self.film.params(emb)
    }

    pub fn pitch_predictor(&self) -> &VariancePredictor {
        &self.pitch
    }

    pub fn energy_predictor(&self) -> &VariancePredictor {
        &self.energy
    }

    pub fn speaker_adapt(
        &self,
        z: &FrameTensor,
        film: &FilmParams,
        state: &mut AdapterState,
    ) -> Result<FrameTensor> {
        speaker_adapt(z, film, &mut state.norm)
    }

    /// Predicted pitch and energy for adapted frames.
    pub fn predict(&self, z_adapted: &FrameTensor, state: &mut AdapterState) -> Result<VarianceTrack> {
        Ok(VarianceTrack {
            pitch: self.pitch.predict(z_adapted, &mut state.pitch)?,
            energy: self.energy.predict(z_adapted, &mut state.energy)?,
        })
    }

    /// `z' = z_adapted + proj_p(transform(pitch)) + proj_e(energy·energy_scale)`
    pub fn apply_variance(
        &self,
        z_adapted: &FrameTensor,
        track: &VarianceTrack,
        controls: &VarianceControls,
        state: &mut PitchControlState,
    ) -> Result<FrameTensor> {
        let t = z_adapted.frames();
        if track.pitch.len() != t || track.energy.len() != t {
            return Err(Error::dim(
                "apply_variance",
                format!(
                    "pitch/energy lengths {}/{} for {t} frames",
                    track.pitch.len(),
                    track.energy.len()
                ),
            ));
        }
        controls.validate()?;
        let pitch = transform_pitch(&track.pitch, controls, state);
        let energy: Vec<f32> = if controls.energy_scale == 1.0 {
            track.energy.clone()
        } else {
            track.energy.iter().map(|&e| e * controls.energy_scale).collect()
        };
        let mut out = z_adapted.clone();
        add_in_place(&mut out, &self.pitch.project(&pitch)?);
        add_in_place(&mut out, &self.energy.project(&energy)?);
        Ok(out)
    }

    /// Full adapter pass. With `track` given (copy-variance mode) the
    /// predictors are bypassed.
    pub fn forward(
        &self,
        z: &FrameTensor,
        film: &FilmParams,
        controls: &VarianceControls,
        track: Option<&VarianceTrack>,
        state: &mut AdapterState,
    ) -> Result<FrameTensor> {
        let za = self.speaker_adapt(z, film, state)?;
        let predicted;
        let track = match track {
            Some(t) => t,
            None => {
                predicted = self.predict(&za, state)?;
                &predicted
            }
        };
        self.apply_variance(&za, track, controls, &mut state.controls)
    }
}
