use serde::{Deserialize, Serialize};

use super::stft::{stft_magnitude, StftResolution};
use crate::error::{Error, Result};
use crate::tensor::FrameTensor;

/// Floor applied before the log in log-mel spectrograms.
pub const MEL_FLOOR: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MelConfig {
    pub sample_rate: u32,
    pub fft_size: usize,
    pub hop: usize,
    pub window_length: usize,
    pub n_mels: usize,
    pub fmin: f64,
    pub fmax: f64,
}

impl Default for MelConfig {
    fn default() -> Self {
        Self {
            sample_rate: 16_000,
            fft_size: 1024,
            hop: 256,
            window_length: 1024,
            n_mels: 80,
            fmin: 0.0,
            fmax: 8000.0,
        }
    }
}

impl MelConfig {
    pub fn resolution(&self) -> StftResolution {
        StftResolution::new(self.fft_size, self.hop, self.window_length)
    }
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filters with unit peak, `n_mels × (fft_size/2 + 1)`, centres
/// equally spaced on the HTK mel scale.
pub fn mel_filterbank(cfg: &MelConfig) -> Result<FrameTensor> {
    if cfg.n_mels == 0 || !(cfg.fmin >= 0.0 && cfg.fmax > cfg.fmin) {
        return Err(Error::Config(format!("bad mel configuration {cfg:?}")));
    }
    let bins = cfg.fft_size / 2 + 1;
    let (lo, hi) = (hz_to_mel(cfg.fmin), hz_to_mel(cfg.fmax));
    let edges: Vec<f64> = (0..cfg.n_mels + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (cfg.n_mels + 1) as f64))
        .collect();
    let mut fb = FrameTensor::zeros(cfg.n_mels, bins);
    for m in 0..cfg.n_mels {
        let (left, centre, right) = (edges[m], edges[m + 1], edges[m + 2]);
        for k in 0..bins {
            let f = k as f64 * cfg.sample_rate as f64 / cfg.fft_size as f64;
            let up = (f - left) / (centre - left);
            let down = (right - f) / (right - centre);
            fb.set(m, k, up.min(down).max(0.0) as f32);
        }
    }
    Ok(fb)
}

/// `ln(max(filterbank · |STFT|, 1e-5))`, `n_mels × frames`.
pub fn log_mel_spectrogram(wave: &[f32], cfg: &MelConfig) -> Result<FrameTensor> {
    let mag = stft_magnitude(wave, &cfg.resolution())?;
    let fb = mel_filterbank(cfg)?;
    let frames = mag.frames();
    let mut out = FrameTensor::zeros(cfg.n_mels, frames);
    for m in 0..cfg.n_mels {
        let filt = fb.row(m);
        for t in 0..frames {
            let mut acc = 0.0f64;
            for (k, &w) in filt.iter().enumerate() {
                if w != 0.0 {
                    acc += w as f64 * mag.get(k, t) as f64;
                }
            }
            out.set(m, t, acc.max(MEL_FLOOR).ln() as f32);
        }
    }
    Ok(out)
}

/// Mean absolute difference between the log-mel spectrograms of `x` and `y`.
pub fn mel_l1_with(x: &[f32], y: &[f32], cfg: &MelConfig) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::dim(
            "mel_l1",
            format!("lengths {} and {}", x.len(), y.len()),
        ));
    }
    let a = log_mel_spectrogram(x, cfg)?;
    let b = log_mel_spectrogram(y, cfg)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&p, &q)| (p as f64 - q as f64).abs())
        .sum();
    Ok(sum / a.data().len() as f64)
}

pub fn mel_l1(x: &[f32], y: &[f32]) -> Result<f64> {
    mel_l1_with(x, y, &MelConfig::default())
}
