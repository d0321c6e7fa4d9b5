//! Speaker embeddings, cosine geometry, and the embedding sidecar file.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::container::{Container, Tensor};
use crate::error::{ContainerError, Error, Result};

/// Default dimensionality: a 192-d ECAPA-TDNN vector concatenated with a
/// 512-d x-vector.
pub const DEFAULT_EMBED_DIM: usize = 704;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceTag {
    Source,
    Pseudo,
}

/// A finite, non-zero voice-identity vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerEmbedding {
    values: Vec<f32>,
    tag: SourceTag,
}

impl SpeakerEmbedding {
    pub fn new(values: Vec<f32>, tag: SourceTag) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("speaker embedding"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                layer: "speaker embedding".into(),
            });
        }
        if norm(&values) == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(Self { values, tag })
    }

    /// Seeded standard-normal vector, for tests and demos without a
    /// speaker encoder.
    pub fn random(dim: usize, seed: u64, tag: SourceTag) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::new((0..dim).map(|_| StandardNormal.sample(&mut rng)).collect(), tag)
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn tag(&self) -> SourceTag {
        self.tag
    }
}

fn norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt()
}

/// `1 − a·b / (‖a‖‖b‖)` on raw vectors, in `[0, 2]`.
pub fn cosine_distance_raw(a: &[f32], b: &[f32]) -> Result<f32> {
    if a.len() != b.len() {
        return Err(Error::dim(
            "cosine_distance",
            format!("{} vs {} dimensions", a.len(), b.len()),
        ));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let dot: f64 = a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum();
    Ok((1.0 - dot / (na * nb)).clamp(0.0, 2.0) as f32)
}

pub fn cosine_distance(a: &SpeakerEmbedding, b: &SpeakerEmbedding) -> Result<f32> {
    cosine_distance_raw(&a.values, &b.values)
}

/// Speaker similarity score, `1 − cosine_distance`.
pub fn cosine_similarity_score(a: &SpeakerEmbedding, b: &SpeakerEmbedding) -> Result<f32> {
    Ok(1.0 - cosine_distance(a, b)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct EmbeddingHeader {
    kind: String,
    source_tag: SourceTag,
}

const EMBEDDING_KIND: &str = "speaker_embedding";

/// Writes a sidecar container holding a single tensor `"embedding"`.
pub fn save_embedding(emb: &SpeakerEmbedding, path: impl AsRef<Path>) -> Result<()> {
    embedding_container(emb).write(path)
}

pub fn embedding_container(emb: &SpeakerEmbedding) -> Container {
    let header = EmbeddingHeader {
        kind: EMBEDDING_KIND.into(),
        source_tag: emb.tag,
    };
    Container {
        config: serde_json::to_string(&header).expect("header serializes"),
        tensors: vec![(
            "embedding".into(),
            Tensor {
                shape: vec![emb.dim()],
                data: emb.values.clone(),
            },
        )],
    }
}

/// Reads an embedding sidecar, optionally checking its dimensionality.
pub fn load_embedding(path: impl AsRef<Path>, expected_dim: Option<usize>) -> Result<SpeakerEmbedding> {
    embedding_from_container(Container::read(path)?, expected_dim)
}

pub fn embedding_from_container(c: Container, expected_dim: Option<usize>) -> Result<SpeakerEmbedding> {
    let header: EmbeddingHeader =
        serde_json::from_str(&c.config).map_err(|e| ContainerError::Config(e.to_string()))?;
    if header.kind != EMBEDDING_KIND {
        return Err(ContainerError::Config(format!("not an embedding file (kind {:?})", header.kind)).into());
    }
    let t = c
        .get("embedding")
        .ok_or_else(|| ContainerError::MissingTensor("embedding".into()))?;
    if t.shape.len() != 1 || c.tensors.len() != 1 {
        return Err(ContainerError::Directory("embedding file must hold one 1-d tensor".into()).into());
    }
    if let Some(dim) = expected_dim {
        if t.shape[0] != dim {
            return Err(ContainerError::Shape {
                name: "embedding".into(),
                expected: vec![dim],
                found: t.shape.clone(),
            }
            .into());
        }
    }
    SpeakerEmbedding::new(t.data.clone(), header.source_tag)
}
