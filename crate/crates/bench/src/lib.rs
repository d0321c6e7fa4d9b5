//! Shared fixtures for the criterion benchmarks.

use streamanon::{FrameTensor, Model, SourceTag, SpeakerEmbedding, Variant};

/// Deterministic pseudo-random samples in `[-0.5, 0.5)` (xorshift).
pub fn noise(len: usize, seed: u64) -> Vec<f32> {
    let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    (0..len)
        .map(|_| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 40) as f32 / (1u64 << 24) as f32 - 0.5
        })
        .collect()
}

pub fn noise_tensor(channels: usize, frames: usize, seed: u64) -> FrameTensor {
    FrameTensor::from_vec(channels, frames, noise(channels * frames, seed)).expect("sizes agree")
}

pub fn model(variant: Variant) -> Model {
    Model::random(variant, 0).expect("random model builds")
}

pub fn embedding(dim: usize) -> SpeakerEmbedding {
    SpeakerEmbedding::new(noise(dim, 99), SourceTag::Pseudo).expect("non-zero embedding")
}
