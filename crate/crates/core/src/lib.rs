//! Streaming speaker anonymization: a causal encoder, speaker and variance
//! adapter, and waveform decoder that convert 16 kHz speech hop by hop into
//! speech with the same content and a generated pseudo-speaker voice.
//!
//! ```no_run
//! use std::sync::Arc;
//! use streamanon::{generate_pseudo, AnonPolicy, Model, SourceTag, SpeakerEmbedding};
//! use streamanon::{open_stream, VarianceControls, Variant};
//!
//! let model = Arc::new(Model::random(Variant::Lite, 0)?);
//! let source = SpeakerEmbedding::new(vec![1.0; 704], SourceTag::Source)?;
//! let pseudo = generate_pseudo(&source, &model.generator, &AnonPolicy::with_seed(7))?;
//! let mut session = open_stream(model, pseudo.embedding, VarianceControls::default())?;
//! let out = session.push_chunk(&[0.0; 640])?;
//! assert_eq!(out.samples.len(), 640);
//! # Ok::<(), streamanon::Error>(())
//! ```

pub mod adapter;
pub mod anonymizer;
pub mod bench;
mod blocks;
pub mod config;
pub mod container;
pub mod decoder;
pub mod embedding;
pub mod encoder;
pub mod error;
pub mod kernels;
pub mod metrics;
pub mod model;
pub mod pitch;
pub mod stream;
pub mod tensor;
pub mod weights;

pub use adapter::{
    speaker_adapt, FilmParams, SpeakerAdapter, VarianceControls, VariancePredictor, VarianceTrack,
};
pub use anonymizer::{generate_pseudo, load_blocklist, AnonPolicy, PseudoGenerator, PseudoSpeaker};
pub use bench::{run_bench, BenchConfig, BenchReport, BenchRow, ReportFormat};
pub use blocks::{Mrf, MrfState};
pub use config::{ArchConfig, DecoderConfig, EncoderConfig, Variant, HOP, SAMPLE_RATE};
pub use container::{Container, Tensor};
pub use decoder::{Decoder, DecoderConditioning, DecoderState};
pub use embedding::{
    cosine_distance, cosine_similarity_score, load_embedding, save_embedding, SourceTag, SpeakerEmbedding,
};
pub use encoder::{predict_units, ContentEncoder, ContentRepr, EncoderState};
pub use error::{ContainerError, Error, Result};
pub use kernels::{ConvSpec, ConvState, CumulativeNormState};
pub use model::Model;
pub use pitch::{extract_energy, extract_pitch, PitchTracker};
pub use stream::{offline_run, open_stream, ChunkResult, StreamOptions, StreamSession};
pub use tensor::FrameTensor;
pub use weights::ModelWeights;
