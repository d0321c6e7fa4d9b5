//! Channel-major frame buffers shared by every stage of the pipeline.

use crate::error::{Error, Result};

/// A `channels × frames` block of `f32` values stored row-major (one row
/// per channel). Waveforms are `1 × samples`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTensor {
    channels: usize,
    frames: usize,
    data: Vec<f32>,
}

impl FrameTensor {
    pub fn zeros(channels: usize, frames: usize) -> Self {
        assert!(channels > 0, "FrameTensor needs at least one channel");
        Self {
            channels,
            frames,
            data: vec![0.0; channels * frames],
        }
    }

    pub fn from_vec(channels: usize, frames: usize, data: Vec<f32>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::dim("FrameTensor", "channels must be positive"));
        }
        if data.len() != channels * frames {
            return Err(Error::dim(
                "FrameTensor",
                format!("{} values for {channels}x{frames}", data.len()),
            ));
        }
        Ok(Self {
            channels,
            frames,
            data,
        })
    }

    /// Wraps a mono waveform.
    pub fn from_samples(samples: Vec<f32>) -> Self {
        Self {
            channels: 1,
            frames: samples.len(),
            data: samples,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    pub fn row(&self, c: usize) -> &[f32] {
        &self.data[c * self.frames..(c + 1) * self.frames]
    }

    pub fn row_mut(&mut self, c: usize) -> &mut [f32] {
        &mut self.data[c * self.frames..(c + 1) * self.frames]
    }

    #[inline]
    pub fn get(&self, c: usize, t: usize) -> f32 {
        self.data[c * self.frames + t]
    }

    #[inline]
    pub fn set(&mut self, c: usize, t: usize, v: f32) {
        self.data[c * self.frames + t] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Frames `[start, end)` of every channel.
    pub fn slice_frames(&self, start: usize, end: usize) -> FrameTensor {
        assert!(start <= end && end <= self.frames);
        let n = end - start;
        let mut data = Vec::with_capacity(self.channels * n);
        for c in 0..self.channels {
            data.extend_from_slice(&self.row(c)[start..end]);
        }
        FrameTensor {
            channels: self.channels,
            frames: n,
            data,
        }
    }

    /// Concatenates along the frame axis.
    pub fn concat_frames(parts: &[FrameTensor]) -> Result<FrameTensor> {
        let first = parts.first().ok_or(Error::Empty("tensor list"))?;
        let channels = first.channels;
        if parts.iter().any(|p| p.channels != channels) {
            return Err(Error::dim("concat_frames", "channel counts differ"));
        }
        let frames: usize = parts.iter().map(|p| p.frames).sum();
        let mut data = Vec::with_capacity(channels * frames);
        for c in 0..channels {
            for p in parts {
                data.extend_from_slice(p.row(c));
            }
        }
        Ok(FrameTensor {
            channels,
            frames,
            data,
        })
    }

    pub(crate) fn ensure_finite(&self, layer: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite {
                layer: layer.to_string(),
            })
        }
    }

    pub(crate) fn ensure_channels(&self, expected: usize, layer: &str) -> Result<()> {
        if self.channels == expected {
            Ok(())
        } else {
            Err(Error::dim(
                layer,
                format!("expected {expected} channels, got {}", self.channels),
            ))
        }
    }
}
