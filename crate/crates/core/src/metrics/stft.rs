use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::FrameTensor;

/// Floor applied to magnitudes before taking logs and to the spectral
/// convergence denominator.
pub const MAG_FLOOR: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftResolution {
    pub fft_size: usize,
    pub hop: usize,
    pub window_length: usize,
}

impl StftResolution {
    pub const fn new(fft_size: usize, hop: usize, window_length: usize) -> Self {
        Self {
            fft_size,
            hop,
            window_length,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fft_size == 0 || self.hop == 0 || self.window_length == 0 {
            return Err(Error::Config("STFT sizes must be positive".into()));
        }
        if self.window_length > self.fft_size || self.hop > self.window_length {
            return Err(Error::Config(format!(
                "STFT needs hop <= window <= fft, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Frames produced for a signal of `len` samples.
    pub fn frames(&self, len: usize) -> usize {
        1 + len / self.hop
    }
}

pub const DEFAULT_RESOLUTIONS: [StftResolution; 3] = [
    StftResolution::new(512, 50, 240),
    StftResolution::new(1024, 120, 600),
    StftResolution::new(2048, 240, 1200),
];

/// Periodic Hann window of `win` samples centred in an `fft`-sample frame.
pub fn padded_hann(win: usize, fft: usize) -> Vec<f64> {
    let mut w = vec![0.0; fft];
    let off = (fft - win) / 2;
    for i in 0..win {
        let phase = 2.0 * std::f64::consts::PI * i as f64 / win as f64;
        w[off + i] = 0.5 - 0.5 * phase.cos();
    }
    w
}

/// Hann-windowed magnitude spectrogram, `bins × frames`. The signal is
/// zero-padded by `fft_size / 2` on both sides so frame `f` is centred on
/// sample `f·hop`.
pub fn stft_magnitude(wave: &[f32], res: &StftResolution) -> Result<FrameTensor> {
    res.validate()?;
    if wave.len() < res.window_length {
        return Err(Error::InvalidArgument(format!(
            "signal of {} samples is shorter than the {}-sample window",
            wave.len(),
            res.window_length
        )));
    }
    if wave.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            layer: "stft_magnitude".into(),
        });
    }
    let n = res.fft_size;
    let pad = n / 2;
    let frames = res.frames(wave.len());
    let bins = res.bins();
    let window = padded_hann(res.window_length, n);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut out = FrameTensor::zeros(bins, frames);
    for f in 0..frames {
        let start = (f * res.hop) as isize - pad as isize;
        for (i, b) in buf.iter_mut().enumerate() {
            let idx = start + i as isize;
            let v = if idx >= 0 && (idx as usize) < wave.len() {
                wave[idx as usize] as f64
            } else {
                0.0
            };
            *b = Complex::new(v * window[i], 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (k, c) in buf.iter().take(bins).enumerate() {
            out.set(k, f, c.norm() as f32);
        }
    }
    Ok(out)
}

/// Spectral convergence and log-magnitude L1 for one resolution.
pub fn stft_loss_terms(x: &[f32], y: &[f32], res: &StftResolution) -> Result<(f64, f64)> {
    let mx = stft_magnitude(x, res)?;
    let my = stft_magnitude(y, res)?;
    let (mut diff2, mut ref2, mut log_l1) = (0.0f64, 0.0f64, 0.0f64);
    for (&a, &b) in mx.data().iter().zip(my.data()) {
        let (a, b) = (a as f64, b as f64);
        diff2 += (a - b) * (a - b);
        ref2 += a * a;
        log_l1 += (a.max(MAG_FLOOR).ln() - b.max(MAG_FLOOR).ln()).abs();
    }
    let sc = diff2.sqrt() / ref2.sqrt().max(MAG_FLOOR);
    Ok((sc, log_l1 / mx.data().len() as f64))
}

/// Mean over `resolutions` of spectral convergence plus log-magnitude L1.
pub fn multires_stft_loss_with(x: &[f32], y: &[f32], resolutions: &[StftResolution]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::dim(
            "multires_stft_loss",
            format!("lengths {} and {}", x.len(), y.len()),
        ));
    }
    if resolutions.is_empty() {
        return Err(Error::Empty("STFT resolutions"));
    }
    let mut total = 0.0;
    for res in resolutions {
        let (sc, mag) = stft_loss_terms(x, y, res)?;
        total += sc + mag;
    }
    Ok(total / resolutions.len() as f64)
}

/// [`multires_stft_loss_with`] at the three default resolutions.
pub fn multires_stft_loss(x: &[f32], y: &[f32]) -> Result<f64> {
    multires_stft_loss_with(x, y, &DEFAULT_RESOLUTIONS)
}
