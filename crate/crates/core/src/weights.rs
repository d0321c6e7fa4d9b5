//! Named-tensor model weights and their expected inventory.

use std::collections::HashMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::ArchConfig;
use crate::container::{Container, Tensor};
use crate::error::{ContainerError, Error, Result};

/// Standard deviation of seeded random initialization.
pub const INIT_STD: f32 = 0.02;

/// How a tensor is filled by [`ModelWeights::init`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    Normal,
    Const(f32),
    /// Two values: mean 0, std 1 (identity standardization).
    Stats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
}

#[derive(Default)]
struct Inventory(Vec<TensorSpec>);

impl Inventory {
    fn push(&mut self, name: String, shape: Vec<usize>, init: Init) {
        self.0.push(TensorSpec { name, shape, init });
    }

    fn conv(&mut self, prefix: &str, cout: usize, cin: usize, k: usize) {
        self.push(format!("{prefix}.weight"), vec![cout, cin, k], Init::Normal);
        self.push(format!("{prefix}.bias"), vec![cout], Init::Normal);
    }

    /// Kernel-1 projections from the speaker embedding to per-channel scale
    /// and shift. The scale bias starts at 1 so random models stay near
    /// identity modulation.
    fn film(&mut self, prefix: &str, channels: usize, embed: usize) {
        self.push(
            format!("{prefix}.scale.weight"),
            vec![channels, embed, 1],
            Init::Normal,
        );
        self.push(format!("{prefix}.scale.bias"), vec![channels], Init::Const(1.0));
        self.conv(&format!("{prefix}.shift"), channels, embed, 1);
    }

    fn mrf(&mut self, prefix: &str, cfg: &ArchConfig, channels: usize) {
        for (ki, &k) in cfg.resblock_kernel_sizes.iter().enumerate() {
            for ri in 0..cfg.resblock_dilations.len() {
                for conv in 1..=2 {
                    self.conv(
                        &format!("{prefix}.mrf{ki}.res{ri}.conv{conv}"),
                        channels,
                        channels,
                        k,
                    );
                }
            }
        }
    }

    fn predictor(&mut self, prefix: &str, cfg: &ArchConfig) {
        let (h, p, k) = (cfg.hidden_dim, cfg.predictor_channels, cfg.predictor_kernel_size);
        self.conv(&format!("{prefix}.conv1"), p, h, k);
        self.norm(&format!("{prefix}.norm1"), p);
        self.conv(&format!("{prefix}.conv2"), p, p, k);
        self.norm(&format!("{prefix}.norm2"), p);
        self.conv(&format!("{prefix}.out"), 1, p, 1);
        self.push(format!("{prefix}.stats"), vec![2], Init::Stats);
        self.conv(&format!("{prefix}.proj"), h, 1, 1);
    }

    fn norm(&mut self, prefix: &str, channels: usize) {
        self.push(format!("{prefix}.gain"), vec![channels], Init::Const(1.0));
        self.push(format!("{prefix}.bias"), vec![channels], Init::Const(0.0));
    }
}

/// Every tensor the architecture needs, in canonical order.
pub fn tensor_inventory(cfg: &ArchConfig) -> Vec<TensorSpec> {
    let mut inv = Inventory::default();
    let enc = cfg.encoder();
    let ch = &enc.channels;
    inv.conv("encoder.pre", ch[0], 1, 7);
    for (i, &r) in enc.downsample_rates.iter().enumerate() {
        inv.mrf(&format!("encoder.stage{i}"), cfg, ch[i]);
        inv.conv(&format!("encoder.stage{i}.down"), ch[i + 1], ch[i], 2 * r);
    }
    inv.conv("encoder.post", cfg.hidden_dim, cfg.hidden_dim, 3);
    inv.conv("encoder.logits", cfg.num_units, cfg.hidden_dim, 1);

    inv.film("adapter.speaker", cfg.hidden_dim, cfg.embed_dim);
    inv.predictor("adapter.pitch", cfg);
    inv.predictor("adapter.energy", cfg);

    let dec = cfg.decoder();
    let ch = &dec.channels;
    inv.conv("decoder.pre", cfg.hidden_dim, cfg.hidden_dim, 7);
    for (i, &u) in dec.upsample_rates.iter().enumerate() {
        inv.conv(&format!("decoder.stage{i}.up"), ch[i + 1], ch[i], 2 * u);
        inv.mrf(&format!("decoder.stage{i}"), cfg, ch[i + 1]);
        inv.film(&format!("decoder.stage{i}.film"), ch[i + 1], cfg.embed_dim);
    }
    inv.conv("decoder.post", 1, *ch.last().unwrap(), 7);

    let mut dims = vec![cfg.latent_dim];
    dims.extend(&cfg.generator_hidden);
    dims.push(cfg.embed_dim);
    for (l, w) in dims.windows(2).enumerate() {
        inv.push(
            format!("generator.layer{l}.weight"),
            vec![w[1], w[0]],
            Init::Normal,
        );
        inv.push(format!("generator.layer{l}.bias"), vec![w[1]], Init::Normal);
    }
    inv.0
}

/// Architecture config plus all of its tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    config: ArchConfig,
    tensors: Vec<(String, Tensor)>,
    index: HashMap<String, usize>,
}

impl ModelWeights {
    /// Checks the tensor set against the architecture inventory exactly.
    pub fn new(config: ArchConfig, tensors: Vec<(String, Tensor)>) -> Result<Self> {
        config.validate()?;
        let index: HashMap<String, usize> = tensors
            .iter()
            .enumerate()
            .map(|(i, (n, _))| (n.clone(), i))
            .collect();
        if index.len() != tensors.len() {
            return Err(ContainerError::Directory("duplicate tensor names".into()).into());
        }
        let inventory = tensor_inventory(&config);
        for spec in &inventory {
            let t = index
                .get(&spec.name)
                .map(|&i| &tensors[i].1)
                .ok_or_else(|| ContainerError::MissingTensor(spec.name.clone()))?;
            if t.shape != spec.shape {
                return Err(ContainerError::Shape {
                    name: spec.name.clone(),
                    expected: spec.shape.clone(),
                    found: t.shape.clone(),
                }
                .into());
            }
            if let Some(v) = t.data.iter().find(|v| !v.is_finite()) {
                return Err(Error::Malformed {
                    what: format!("tensor {}", spec.name),
                    detail: format!("non-finite value {v}"),
                });
            }
        }
        if tensors.len() != inventory.len() {
            let known: std::collections::HashSet<&str> = inventory.iter().map(|s| s.name.as_str()).collect();
            let extra = tensors
                .iter()
                .find(|(n, _)| !known.contains(n.as_str()))
                .map(|(n, _)| n.clone())
                .unwrap_or_default();
            return Err(ContainerError::UnexpectedTensor(extra).into());
        }
        Ok(Self {
            config,
            tensors,
            index,
        })
    }

    /// Seeded random weights: N(0, 0.02) everywhere except norm gains,
    /// FiLM scale biases and standardization stats.
    pub fn init(config: ArchConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0f32, INIT_STD).expect("valid std");
        let tensors = tensor_inventory(&config)
            .into_iter()
            .map(|spec| {
                let n: usize = spec.shape.iter().product();
                let data = match spec.init {
                    Init::Normal => (0..n).map(|_| normal.sample(&mut rng)).collect(),
                    Init::Const(v) => vec![v; n],
                    Init::Stats => vec![0.0, 1.0],
                };
                (
                    spec.name,
                    Tensor {
                        shape: spec.shape,
                        data,
                    },
                )
            })
            .collect();
        Self::new(config, tensors)
    }

    pub fn config(&self) -> &ArchConfig {
        &self.config
    }

    pub fn tensors(&self) -> &[(String, Tensor)] {
        &self.tensors
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.index
            .get(name)
            .map(|&i| &self.tensors[i].1)
            .ok_or_else(|| ContainerError::MissingTensor(name.to_string()).into())
    }

    /// Mutable access for tests and tools that craft specific weights.
    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor> {
        match self.index.get(name) {
            Some(&i) => Ok(&mut self.tensors[i].1),
            None => Err(ContainerError::MissingTensor(name.to_string()).into()),
        }
    }

    pub fn param_count(&self) -> usize {
        self.tensors.iter().map(|(_, t)| t.numel()).sum()
    }

    /// Parameter count grouped by top-level component.
    pub fn param_breakdown(&self) -> Vec<(String, usize)> {
        let mut out: Vec<(String, usize)> = Vec::new();
        for (name, t) in &self.tensors {
            let group = name.split('.').next().unwrap_or("").to_string();
            match out.iter_mut().find(|(g, _)| *g == group) {
                Some((_, n)) => *n += t.numel(),
                None => out.push((group, t.numel())),
            }
        }
        out
    }

    pub fn to_container(&self) -> Container {
        Container {
            config: serde_json::to_string(&self.config).expect("config serializes"),
            tensors: self.tensors.clone(),
        }
    }

    pub fn from_container(c: Container) -> Result<Self> {
        let config: ArchConfig =
            serde_json::from_str(&c.config).map_err(|e| ContainerError::Config(e.to_string()))?;
        Self::new(config, c.tensors)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_container().write(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_container(Container::read(path)?)
    }
}
