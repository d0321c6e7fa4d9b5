//! Causal 1-D convolutions with carried history.
//!
//! Every output element is accumulated in one fixed order: bias first, then
//! input channels ascending, and within a channel the kernel taps ascending.
//! The kernels vectorize across output frames and block over output
//! channels, neither of which touches that per-element order, so a stream
//! split into arbitrary chunks produces bit-identical output to a single
//! call over the whole signal.
//!
//! Weight layout is `[out_channels][in_channels][kernel_size]`.

use super::micro::{SourceRows, TapPlan};
use crate::error::{Error, Result};
use crate::tensor::FrameTensor;

/// Shape of one convolution layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_size: usize,
    pub stride: usize,
    pub dilation: usize,
    pub has_bias: bool,
}

impl ConvSpec {
    pub fn new(in_channels: usize, out_channels: usize, kernel_size: usize) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel_size,
            stride: 1,
            dilation: 1,
            has_bias: true,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn with_dilation(mut self, dilation: usize) -> Self {
        self.dilation = dilation;
        self
    }

    pub fn without_bias(mut self) -> Self {
        self.has_bias = false;
        self
    }

    pub fn weight_len(&self) -> usize {
        self.out_channels * self.in_channels * self.kernel_size
    }

    /// Input frames of history a stride/dilation convolution carries.
    pub fn history_len(&self) -> usize {
        (self.kernel_size - 1) * self.dilation
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.out_channels == 0 {
            return Err(Error::Config("conv channels must be positive".into()));
        }
        if self.kernel_size == 0 || self.stride == 0 || self.dilation == 0 {
            return Err(Error::Config(
                "kernel_size, stride and dilation must be >= 1".into(),
            ));
        }
        if self.dilation > 1 && self.stride != 1 {
            return Err(Error::Config("dilated convolutions must have stride 1".into()));
        }
        Ok(())
    }
}

/// Trailing input history of one convolution in one stream.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvState {
    channels: usize,
    len: usize,
    history: Vec<f32>,
}

impl ConvState {
    pub fn new(channels: usize, len: usize) -> Self {
        Self {
            channels,
            len,
            history: vec![0.0; channels * len],
        }
    }

    /// Zeroed state for a strided/dilated convolution.
    pub fn for_conv(spec: &ConvSpec) -> Self {
        Self::new(spec.in_channels, spec.history_len())
    }

    /// Zeroed state for an upsampling convolution with factor `up`.
    pub fn for_upsample(spec: &ConvSpec, up: usize) -> Self {
        Self::new(spec.in_channels, upsample_history(spec.kernel_size, up))
    }

    /// History as a `channels × len` tensor (oldest frame first).
    pub fn history(&self) -> FrameTensor {
        FrameTensor::from_vec(self.channels, self.len, self.history.clone())
            .expect("state dims are consistent")
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    fn at(&self, c: usize, i: usize) -> f32 {
        self.history[c * self.len + i]
    }

    fn row(&self, c: usize) -> &[f32] {
        &self.history[c * self.len..(c + 1) * self.len]
    }

    /// Replaces the history by the last `len` frames of `hist ++ act(x)`.
    fn advance(&mut self, x: &FrameTensor, slope: Option<f32>) {
        let h = self.len;
        if h == 0 {
            return;
        }
        let t = x.frames();
        for c in 0..self.channels {
            let row = &mut self.history[c * h..(c + 1) * h];
            if t >= h {
                copy_act(row, &x.row(c)[t - h..], slope);
            } else {
                row.copy_within(t.., 0);
                copy_act(&mut row[h - t..], x.row(c), slope);
            }
        }
    }
}

#[inline]
fn act(v: f32, slope: Option<f32>) -> f32 {
    match slope {
        Some(a) if v < 0.0 => v * a,
        _ => v,
    }
}

/// `dst ← act(src)`; returns whether every source value was finite.
fn copy_act(dst: &mut [f32], src: &[f32], slope: Option<f32>) -> bool {
    let mut finite = true;
    match slope {
        None => {
            for (d, &v) in dst.iter_mut().zip(src) {
                *d = v;
                finite &= v.is_finite();
            }
        }
        Some(a) => {
            for (d, &v) in dst.iter_mut().zip(src) {
                *d = if v < 0.0 { v * a } else { v };
                finite &= v.is_finite();
            }
        }
    }
    finite
}

fn upsample_history(kernel_size: usize, up: usize) -> usize {
    (kernel_size - 1).div_ceil(up)
}

fn check_params(name: &str, spec: &ConvSpec, weight: &[f32], bias: Option<&[f32]>) -> Result<()> {
    spec.validate()?;
    if weight.len() != spec.weight_len() {
        return Err(Error::dim(
            name,
            format!(
                "weight has {} values, expected {}",
                weight.len(),
                spec.weight_len()
            ),
        ));
    }
    match (spec.has_bias, bias) {
        (true, Some(b)) if b.len() == spec.out_channels => Ok(()),
        (true, Some(b)) => Err(Error::dim(
            name,
            format!("bias has {} values, expected {}", b.len(), spec.out_channels),
        )),
        (true, None) => Err(Error::dim(name, "bias missing")),
        (false, None) => Ok(()),
        (false, Some(_)) => Err(Error::dim(name, "bias given for a bias-free layer")),
    }
}

/// A causal (strided or dilated) convolution layer with prepacked weights.
#[derive(Debug, Clone)]
pub struct CausalConv1d {
    name: String,
    spec: ConvSpec,
    plan: TapPlan,
}

impl CausalConv1d {
    pub fn new(
        name: impl Into<String>,
        spec: ConvSpec,
        weight: &[f32],
        bias: Option<&[f32]>,
    ) -> Result<Self> {
        let name = name.into();
        check_params(&name, &spec, weight, bias)?;
        let s = spec.stride;
        let taps = (0..spec.kernel_size)
            .map(|j| {
                if s == 1 {
                    (j, 0, j * spec.dilation)
                } else {
                    (j, j % s, j / s)
                }
            })
            .collect();
        Ok(Self {
            plan: TapPlan::new(weight, bias, &spec, taps),
            name,
            spec,
        })
    }

    pub fn spec(&self) -> &ConvSpec {
        &self.spec
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn new_state(&self) -> ConvState {
        ConvState::for_conv(&self.spec)
    }

    pub fn forward(&self, x: &FrameTensor, state: &mut ConvState) -> Result<FrameTensor> {
        self.forward_act(x, None, state)
    }

    /// `forward(leaky_relu(x, slope))` without materializing the activation.
    pub(crate) fn forward_leaky(
        &self,
        x: &FrameTensor,
        slope: f32,
        state: &mut ConvState,
    ) -> Result<FrameTensor> {
        self.forward_act(x, Some(slope), state)
    }

    fn forward_act(&self, x: &FrameTensor, slope: Option<f32>, state: &mut ConvState) -> Result<FrameTensor> {
        let spec = &self.spec;
        x.ensure_channels(spec.in_channels, &self.name)?;
        if state.channels != spec.in_channels || state.len != spec.history_len() {
            return Err(Error::dim(&self.name, "state does not match layer"));
        }
        if !x.frames().is_multiple_of(spec.stride) {
            return Err(Error::dim(
                &self.name,
                format!("{} frames not divisible by stride {}", x.frames(), spec.stride),
            ));
        }
        let cin = spec.in_channels;
        let s = spec.stride;
        let h = state.len;
        let t_in = x.frames();
        let tout = t_in / s;
        if s > 1 {
            x.ensure_finite(&self.name)?;
        }
        if tout == 0 {
            return Ok(FrameTensor::zeros(spec.out_channels, 0));
        }
        let mut src = SourceRows::zeroed(cin, s, tout, self.plan.max_shift.max(h));
        let ext_len = h + t_in;
        let mut finite = true;
        for c in 0..cin {
            let xr = x.row(c);
            for p in 0..s {
                let row = src.row_mut(c, p);
                // row[m] = ext[p + s·m], where ext = history ++ act(x)
                if s == 1 {
                    row[..h].copy_from_slice(state.row(c));
                    finite &= copy_act(&mut row[h..h + t_in], xr, slope);
                } else {
                    for (m, e) in (p..ext_len).step_by(s).enumerate() {
                        row[m] = if e < h {
                            state.at(c, e)
                        } else {
                            act(xr[e - h], slope)
                        };
                    }
                }
            }
        }
        if !finite {
            return Err(Error::NonFinite {
                layer: self.name.clone(),
            });
        }
        let out = self.plan.run(&src, tout);
        state.advance(x, slope);
        FrameTensor::from_vec(spec.out_channels, tout, out)
    }
}

/// Causal transposed convolution: zero-stuff by `factor`, then a causal
/// stride-1 convolution. Evaluated polyphase so stuffed zeros are never
/// multiplied; the remaining taps keep ascending kernel order.
#[derive(Debug, Clone)]
pub struct CausalUpsampleConv1d {
    name: String,
    spec: ConvSpec,
    factor: usize,
    phases: Vec<TapPlan>,
}

impl CausalUpsampleConv1d {
    pub fn new(
        name: impl Into<String>,
        spec: ConvSpec,
        factor: usize,
        weight: &[f32],
        bias: Option<&[f32]>,
    ) -> Result<Self> {
        let name = name.into();
        check_params(&name, &spec, weight, bias)?;
        if spec.stride != 1 || spec.dilation != 1 {
            return Err(Error::Config(format!(
                "{name}: upsampling conv must have stride 1 and dilation 1"
            )));
        }
        if factor == 0 {
            return Err(Error::Config(format!("{name}: up factor must be >= 1")));
        }
        let k = spec.kernel_size as isize;
        let u = factor as isize;
        let hist = upsample_history(spec.kernel_size, factor) as isize;
        let phases = (0..u)
            .map(|p| {
                let taps = (0..k)
                    .filter(|&j| (p + j - (k - 1)).rem_euclid(u) == 0)
                    .map(|j| {
                        let shift = hist + (p + j - (k - 1)).div_euclid(u);
                        (j as usize, 0, shift as usize)
                    })
                    .collect();
                TapPlan::new(weight, bias, &spec, taps)
            })
            .collect();
        Ok(Self {
            name,
            spec,
            factor,
            phases,
        })
    }

    pub fn spec(&self) -> &ConvSpec {
        &self.spec
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn new_state(&self) -> ConvState {
        ConvState::for_upsample(&self.spec, self.factor)
    }

    pub fn forward(&self, x: &FrameTensor, state: &mut ConvState) -> Result<FrameTensor> {
        self.forward_act(x, None, state)
    }

    /// `forward(leaky_relu(x, slope))` without materializing the activation.
    pub(crate) fn forward_leaky(
        &self,
        x: &FrameTensor,
        slope: f32,
        state: &mut ConvState,
    ) -> Result<FrameTensor> {
        self.forward_act(x, Some(slope), state)
    }

    fn forward_act(&self, x: &FrameTensor, slope: Option<f32>, state: &mut ConvState) -> Result<FrameTensor> {
        let spec = &self.spec;
        x.ensure_channels(spec.in_channels, &self.name)?;
        if state.channels != spec.in_channels || state.len != upsample_history(spec.kernel_size, self.factor)
        {
            return Err(Error::dim(&self.name, "state does not match layer"));
        }
        let cin = spec.in_channels;
        let t_in = x.frames();
        let u = self.factor;
        if t_in == 0 {
            return Ok(FrameTensor::zeros(spec.out_channels, 0));
        }
        let h = state.len;
        let max_shift = self.phases.iter().map(|p| p.max_shift).max().unwrap_or(0);
        let mut src = SourceRows::zeroed(cin, 1, t_in, max_shift.max(h));
        let mut finite = true;
        for c in 0..cin {
            let row = src.row_mut(c, 0);
            row[..h].copy_from_slice(state.row(c));
            finite &= copy_act(&mut row[h..h + t_in], x.row(c), slope);
        }
        if !finite {
            return Err(Error::NonFinite {
                layer: self.name.clone(),
            });
        }
        let tout = t_in * u;
        let mut out = vec![0.0f32; spec.out_channels * tout];
        for (p, plan) in self.phases.iter().enumerate() {
            let dst = plan.run(&src, t_in);
            for oc in 0..spec.out_channels {
                let orow = &mut out[oc * tout..(oc + 1) * tout];
                let drow = &dst[oc * t_in..(oc + 1) * t_in];
                for (n, &v) in drow.iter().enumerate() {
                    orow[n * u + p] = v;
                }
            }
        }
        state.advance(x, slope);
        FrameTensor::from_vec(spec.out_channels, tout, out)
    }
}

/// One call of a causal convolution: output frame `n` is
/// `bias + Σ_ic Σ_j w[j]·x[n·stride − (k−1−j)·dilation]`, reading frames
/// before the chunk from `state`, which then holds the new trailing window.
pub fn causal_conv1d(
    x: &FrameTensor,
    weight: &[f32],
    bias: Option<&[f32]>,
    spec: &ConvSpec,
    state: &mut ConvState,
) -> Result<FrameTensor> {
    CausalConv1d::new("causal_conv1d", *spec, weight, bias)?.forward(x, state)
}

/// One call of a causal upsampling convolution; output frame `m` depends only
/// on input frames `<= m / up`.
pub fn causal_upsample_conv1d(
    x: &FrameTensor,
    weight: &[f32],
    bias: Option<&[f32]>,
    spec: &ConvSpec,
    up: usize,
    state: &mut ConvState,
) -> Result<FrameTensor> {
    CausalUpsampleConv1d::new("causal_upsample_conv1d", *spec, up, weight, bias)?.forward(x, state)
}
