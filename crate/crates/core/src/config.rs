//! Architecture configuration for the two model variants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SAMPLE_RATE: u32 = 16_000;
/// Waveform samples per content frame (20 ms at 16 kHz).
pub const HOP: usize = 320;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Base,
    Lite,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Base => "base",
            Variant::Lite => "lite",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(Variant::Base),
            "lite" => Ok(Variant::Lite),
            other => Err(Error::InvalidArgument(format!(
                "unknown variant {other:?} (expected base or lite)"
            ))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Full architecture description, stored as JSON in model containers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub variant: Variant,
    pub sample_rate: u32,
    /// Width of the content representation `z`.
    pub hidden_dim: usize,
    /// Channel width of the residual stack at the waveform rate.
    pub base_channels: usize,
    pub downsample_rates: Vec<usize>,
    pub upsample_rates: Vec<usize>,
    pub resblock_kernel_sizes: Vec<usize>,
    /// `(first, second)` dilation of each residual pair.
    pub resblock_dilations: Vec<[usize; 2]>,
    pub embed_dim: usize,
    pub num_units: usize,
    pub predictor_channels: usize,
    pub predictor_kernel_size: usize,
    pub latent_dim: usize,
    pub generator_hidden: Vec<usize>,
}

impl ArchConfig {
    pub fn base() -> Self {
        Self {
            variant: Variant::Base,
            sample_rate: SAMPLE_RATE,
            hidden_dim: 512,
            base_channels: 8,
            downsample_rates: vec![2, 2, 4, 4, 5],
            upsample_rates: vec![5, 4, 4, 2, 2],
            resblock_kernel_sizes: vec![3, 7, 11],
            resblock_dilations: vec![[1, 1], [3, 1], [5, 1]],
            embed_dim: 704,
            num_units: 200,
            predictor_channels: 512,
            predictor_kernel_size: 3,
            latent_dim: 128,
            generator_hidden: vec![256, 512],
        }
    }

    pub fn lite() -> Self {
        Self {
            variant: Variant::Lite,
            hidden_dim: 128,
            base_channels: 4,
            predictor_channels: 128,
            ..Self::base()
        }
    }

    pub fn for_variant(variant: Variant) -> Self {
        match variant {
            Variant::Base => Self::base(),
            Variant::Lite => Self::lite(),
        }
    }

    pub fn hop(&self) -> usize {
        self.downsample_rates.iter().product()
    }

    /// Frame rate of `z` in Hz.
    pub fn frame_rate(&self) -> f64 {
        self.sample_rate as f64 / self.hop() as f64
    }

    /// Channel width at each rate level: level 0 is the waveform rate, the
    /// last level is the content rate and always equals `hidden_dim`.
    /// Widths double at every level past the first, starting from
    /// `base_channels` and capped at `hidden_dim`.
    pub fn level_channels(&self) -> Vec<usize> {
        let levels = self.downsample_rates.len();
        let mut widths: Vec<usize> = (0..levels)
            .map(|l| (self.base_channels << l.saturating_sub(1)).min(self.hidden_dim))
            .collect();
        widths.push(self.hidden_dim);
        widths
    }

    pub fn encoder(&self) -> EncoderConfig {
        EncoderConfig {
            downsample_rates: self.downsample_rates.clone(),
            kernel_sizes: self.resblock_kernel_sizes.clone(),
            dilations: self.resblock_dilations.clone(),
            channels: self.level_channels(),
            hidden_dim: self.hidden_dim,
            num_units: self.num_units,
        }
    }

    pub fn decoder(&self) -> DecoderConfig {
        let mut channels = self.level_channels();
        channels.reverse();
        DecoderConfig {
            upsample_rates: self.upsample_rates.clone(),
            kernel_sizes: self.resblock_kernel_sizes.clone(),
            dilations: self.resblock_dilations.clone(),
            channels,
            input_dim: self.hidden_dim,
            embed_dim: self.embed_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.sample_rate != SAMPLE_RATE {
            return bad(format!("sample_rate {} (only 16000 supported)", self.sample_rate));
        }
        if self.downsample_rates.is_empty() || self.downsample_rates.contains(&0) {
            return bad("downsample_rates must be non-empty and positive".into());
        }
        if self.hop() != HOP {
            return bad(format!(
                "downsample rates multiply to {}, expected {HOP}",
                self.hop()
            ));
        }
        let up: usize = self.upsample_rates.iter().product();
        if up != HOP || self.upsample_rates.contains(&0) {
            return bad(format!("upsample rates multiply to {up}, expected {HOP}"));
        }
        if self.upsample_rates.len() != self.downsample_rates.len() {
            return bad("encoder and decoder need the same number of stages".into());
        }
        if self.resblock_kernel_sizes.is_empty() || self.resblock_kernel_sizes.contains(&0) {
            return bad("resblock kernel sizes must be positive".into());
        }
        if self.resblock_dilations.is_empty() || self.resblock_dilations.iter().flatten().any(|&d| d == 0) {
            return bad("resblock dilations must be positive".into());
        }
        if self.num_units < 2 {
            return bad("num_units must be at least 2".into());
        }
        for (name, v) in [
            ("hidden_dim", self.hidden_dim),
            ("base_channels", self.base_channels),
            ("embed_dim", self.embed_dim),
            ("predictor_channels", self.predictor_channels),
            ("predictor_kernel_size", self.predictor_kernel_size),
            ("latent_dim", self.latent_dim),
        ] {
            if v == 0 {
                return bad(format!("{name} must be positive"));
            }
        }
        if self.generator_hidden.contains(&0) {
            return bad("generator hidden dims must be positive".into());
        }
        Ok(())
    }
}

/// Content-encoder view of the architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    pub downsample_rates: Vec<usize>,
    pub kernel_sizes: Vec<usize>,
    pub dilations: Vec<[usize; 2]>,
    /// Width at each level, waveform rate first; the last entry is `hidden_dim`.
    pub channels: Vec<usize>,
    pub hidden_dim: usize,
    pub num_units: usize,
}

/// Decoder view of the architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderConfig {
    pub upsample_rates: Vec<usize>,
    pub kernel_sizes: Vec<usize>,
    pub dilations: Vec<[usize; 2]>,
    /// Width at each level, content rate first; the first entry is `input_dim`.
    pub channels: Vec<usize>,
    pub input_dim: usize,
    pub embed_dim: usize,
}
