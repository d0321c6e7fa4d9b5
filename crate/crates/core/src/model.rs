//! A loaded model: all stages built from one weight set.

use std::path::Path;

use crate::adapter::SpeakerAdapter;
use crate::anonymizer::PseudoGenerator;
use crate::config::{ArchConfig, Variant};
use crate::decoder::Decoder;
use crate::encoder::ContentEncoder;
use crate::error::Result;
use crate::weights::ModelWeights;

/// Immutable network; share it between sessions behind an `Arc`.
#[derive(Debug, Clone)]
pub struct Model {
    config: ArchConfig,
    param_count: usize,
    pub encoder: ContentEncoder,
    pub adapter: SpeakerAdapter,
    pub decoder: Decoder,
    pub generator: PseudoGenerator,
}

impl Model {
    pub fn from_weights(w: &ModelWeights) -> Result<Self> {
        Ok(Self {
            config: w.config().clone(),
            param_count: w.param_count(),
            encoder: ContentEncoder::from_weights(w)?,
            adapter: SpeakerAdapter::from_weights(w)?,
            decoder: Decoder::from_weights(w)?,
            generator: PseudoGenerator::from_weights(w)?,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_weights(&ModelWeights::load(path)?)
    }

    /// Seeded random model of the given variant.
    pub fn random(variant: Variant, seed: u64) -> Result<Self> {
        Self::from_weights(&ModelWeights::init(ArchConfig::for_variant(variant), seed)?)
    }

    pub fn config(&self) -> &ArchConfig {
        &self.config
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }

    pub fn embed_dim(&self) -> usize {
        self.config.embed_dim
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }
}
