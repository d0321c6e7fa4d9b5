//! Layer construction from named weights and the multi-receptive-field
//! residual stack shared by encoder and decoder.

use crate::config::ArchConfig;
use crate::error::Result;
use crate::kernels::{CausalConv1d, ConvSpec, ConvState, LRELU_SLOPE};
use crate::tensor::FrameTensor;
use crate::weights::ModelWeights;

pub(crate) fn conv(w: &ModelWeights, prefix: &str, spec: ConvSpec) -> Result<CausalConv1d> {
    let weight = w.get(&format!("{prefix}.weight"))?;
    let bias = w.get(&format!("{prefix}.bias"))?;
    CausalConv1d::new(prefix, spec, &weight.data, Some(&bias.data))
}

pub(crate) fn add_in_place(acc: &mut FrameTensor, other: &FrameTensor) {
    debug_assert_eq!(acc.data().len(), other.data().len());
    for (a, b) in acc.data_mut().iter_mut().zip(other.data()) {
        *a += *b;
    }
}

/// `x ← x + conv2(lrelu(conv1(lrelu(x))))` for each dilation pair.
#[derive(Debug, Clone)]
struct ResBlock {
    pairs: Vec<(CausalConv1d, CausalConv1d)>,
}

/// Parallel residual blocks with different kernel sizes, averaged.
#[derive(Debug, Clone)]
pub struct Mrf {
    channels: usize,
    blocks: Vec<ResBlock>,
}

#[derive(Debug, Clone)]
pub struct MrfState {
    blocks: Vec<Vec<(ConvState, ConvState)>>,
}

impl Mrf {
    pub(crate) fn from_weights(
        w: &ModelWeights,
        prefix: &str,
        cfg: &ArchConfig,
        channels: usize,
    ) -> Result<Self> {
        let mut blocks = Vec::with_capacity(cfg.resblock_kernel_sizes.len());
        for (ki, &k) in cfg.resblock_kernel_sizes.iter().enumerate() {
            let mut pairs = Vec::with_capacity(cfg.resblock_dilations.len());
            for (ri, d) in cfg.resblock_dilations.iter().enumerate() {
                let base = format!("{prefix}.mrf{ki}.res{ri}");
                let spec = ConvSpec::new(channels, channels, k);
                pairs.push((
                    conv(w, &format!("{base}.conv1"), spec.with_dilation(d[0]))?,
                    conv(w, &format!("{base}.conv2"), spec.with_dilation(d[1]))?,
                ));
            }
            blocks.push(ResBlock { pairs });
        }
        Ok(Self { channels, blocks })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn new_state(&self) -> MrfState {
        MrfState {
            blocks: self
                .blocks
                .iter()
                .map(|b| {
                    b.pairs
                        .iter()
                        .map(|(a, c)| (a.new_state(), c.new_state()))
                        .collect()
                })
                .collect(),
        }
    }

    pub fn forward(&self, x: &FrameTensor, state: &mut MrfState) -> Result<FrameTensor> {
        let mut sum: Option<FrameTensor> = None;
        for (block, bstate) in self.blocks.iter().zip(state.blocks.iter_mut()) {
            let mut y = x.clone();
            for ((c1, c2), (s1, s2)) in block.pairs.iter().zip(bstate.iter_mut()) {
                let t = c1.forward_leaky(&y, LRELU_SLOPE, s1)?;
                let t = c2.forward_leaky(&t, LRELU_SLOPE, s2)?;
                add_in_place(&mut y, &t);
            }
            match sum.as_mut() {
                Some(s) => add_in_place(s, &y),
                None => sum = Some(y),
            }
        }
        let mut out = sum.expect("at least one residual block");
        let n = self.blocks.len() as f32;
        for v in out.data_mut() {
            *v /= n;
        }
        Ok(out)
    }
}
