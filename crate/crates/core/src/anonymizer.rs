//! Pseudo-speaker generation by rejection sampling a latent-to-embedding
//! generator until the candidate is far enough from the source.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::container::Container;
use crate::embedding::{cosine_distance, embedding_from_container, SourceTag, SpeakerEmbedding};
use crate::error::{ContainerError, Error, Result};
use crate::weights::ModelWeights;

/// Hidden-layer slope of the generator MLP.
pub const GENERATOR_SLOPE: f32 = 0.2;

#[derive(Debug, Clone)]
struct Dense {
    inputs: usize,
    outputs: usize,
    /// `[outputs][inputs]`
    weight: Vec<f32>,
    bias: Vec<f32>,
}

impl Dense {
    fn forward(&self, x: &[f32]) -> Vec<f32> {
        (0..self.outputs)
            .map(|o| {
                let row = &self.weight[o * self.inputs..(o + 1) * self.inputs];
                row.iter().zip(x).fold(self.bias[o], |acc, (&w, &v)| acc + w * v)
            })
            .collect()
    }
}

/// MLP mapping a standard-normal latent to a speaker embedding.
#[derive(Debug, Clone)]
pub struct PseudoGenerator {
    layers: Vec<Dense>,
}

impl PseudoGenerator {
    pub fn from_weights(w: &ModelWeights) -> Result<Self> {
        let cfg = w.config();
        let mut dims = vec![cfg.latent_dim];
        dims.extend(&cfg.generator_hidden);
        dims.push(cfg.embed_dim);
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(l, d)| {
                Ok(Dense {
                    inputs: d[0],
                    outputs: d[1],
                    weight: w.get(&format!("generator.layer{l}.weight"))?.data.clone(),
                    bias: w.get(&format!("generator.layer{l}.bias"))?.data.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { layers })
    }

    /// Builds a generator from explicit `(weight [out][in], bias)` layers.
    pub fn from_layers(layers: Vec<(Vec<f32>, Vec<f32>)>, latent_dim: usize) -> Result<Self> {
        let mut inputs = latent_dim;
        let mut out = Vec::with_capacity(layers.len());
        for (i, (weight, bias)) in layers.into_iter().enumerate() {
            let outputs = bias.len();
            if outputs == 0 || weight.len() != outputs * inputs {
                return Err(Error::dim(
                    format!("generator.layer{i}"),
                    format!("weight {} for {inputs}->{outputs}", weight.len()),
                ));
            }
            out.push(Dense {
                inputs,
                outputs,
                weight,
                bias,
            });
            inputs = outputs;
        }
        if out.is_empty() {
            return Err(Error::Empty("generator layers"));
        }
        Ok(Self { layers: out })
    }

    pub fn latent_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().outputs
    }

    pub fn forward(&self, latent: &[f32]) -> Result<Vec<f32>> {
        if latent.len() != self.latent_dim() {
            return Err(Error::dim(
                "generator",
                format!(
                    "latent of {} values, expected {}",
                    latent.len(),
                    self.latent_dim()
                ),
            ));
        }
        let mut x = latent.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            x = layer.forward(&x);
            if i < last {
                for v in &mut x {
                    if *v < 0.0 {
                        *v *= GENERATOR_SLOPE;
                    }
                }
            }
        }
        Ok(x)
    }
}

/// Acceptance rule for pseudo-speakers.
#[derive(Debug, Clone)]
pub struct AnonPolicy {
    pub min_cosine_distance: f32,
    pub max_attempts: usize,
    pub rng_seed: u64,
    /// Known speakers the pseudo-speaker must also be far from.
    pub blocklist: Vec<SpeakerEmbedding>,
}

impl Default for AnonPolicy {
    fn default() -> Self {
        Self {
            min_cosine_distance: 0.3,
            max_attempts: 1000,
            rng_seed: 0,
            blocklist: Vec::new(),
        }
    }
}

impl AnonPolicy {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            rng_seed: seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..2.0).contains(&self.min_cosine_distance) {
            return Err(Error::InvalidArgument(format!(
                "min_cosine_distance {} outside [0, 2)",
                self.min_cosine_distance
            )));
        }
        if self.max_attempts == 0 {
            return Err(Error::InvalidArgument("max_attempts must be >= 1".into()));
        }
        Ok(())
    }
}

/// A returned pseudo-speaker and how it was found.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoSpeaker {
    pub embedding: SpeakerEmbedding,
    pub attempts: usize,
    /// Cosine distance from the source embedding.
    pub distance: f32,
}

/// Samples latents from a seeded RNG until the generated embedding is more
/// than `min_cosine_distance` from the source (and from every blocklisted
/// speaker). Deterministic in `(seed, generator, source)`.
pub fn generate_pseudo(
    source: &SpeakerEmbedding,
    generator: &PseudoGenerator,
    policy: &AnonPolicy,
) -> Result<PseudoSpeaker> {
    policy.validate()?;
    if generator.output_dim() != source.dim() {
        return Err(Error::dim(
            "generate_pseudo",
            format!(
                "generator emits {} values, source has {}",
                generator.output_dim(),
                source.dim()
            ),
        ));
    }
    if let Some(b) = policy.blocklist.iter().find(|b| b.dim() != source.dim()) {
        return Err(Error::dim(
            "generate_pseudo",
            format!("blocklist entry has {} values, source {}", b.dim(), source.dim()),
        ));
    }
    let threshold = policy.min_cosine_distance;
    let mut rng = ChaCha8Rng::seed_from_u64(policy.rng_seed);
    let mut best = f32::NEG_INFINITY;
    let mut latent = vec![0.0f32; generator.latent_dim()];
    for attempt in 1..=policy.max_attempts {
        for v in latent.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let values = generator.forward(&latent)?;
        let candidate = match SpeakerEmbedding::new(values, SourceTag::Pseudo) {
            Ok(c) => c,
            Err(Error::ZeroNorm | Error::NonFinite { .. }) => continue,
            Err(e) => return Err(e),
        };
        let distance = cosine_distance(source, &candidate)?;
        best = best.max(distance);
        if distance <= threshold {
            continue;
        }
        let mut clear = true;
        for known in &policy.blocklist {
            if cosine_distance(known, &candidate)? <= threshold {
                clear = false;
                break;
            }
        }
        if clear {
            return Ok(PseudoSpeaker {
                embedding: candidate,
                attempts: attempt,
                distance,
            });
        }
    }
    Err(Error::MaxAttempts {
        attempts: policy.max_attempts,
        best_distance: if best.is_finite() { best } else { 0.0 },
        required: threshold,
    })
}

/// Reads a blocklist: either a single-embedding sidecar or a container with
/// one `[n, dim]` tensor named `"embeddings"`.
pub fn load_blocklist(path: impl AsRef<Path>, dim: usize) -> Result<Vec<SpeakerEmbedding>> {
    let c = Container::read(path)?;
    if let Some(t) = c.get("embeddings") {
        if t.shape.len() != 2 || t.shape[1] != dim {
            return Err(ContainerError::Shape {
                name: "embeddings".into(),
                expected: vec![t.shape.first().copied().unwrap_or(0), dim],
                found: t.shape.clone(),
            }
            .into());
        }
        return t
            .data
            .chunks_exact(dim)
            .map(|row| SpeakerEmbedding::new(row.to_vec(), SourceTag::Source))
            .collect();
    }
    Ok(vec![embedding_from_container(c, Some(dim))?])
}
