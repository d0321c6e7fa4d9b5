use crate::error::{Error, Result};
use crate::tensor::FrameTensor;

/// Slope used by the residual stacks.
pub const LRELU_SLOPE: f32 = 0.1;

pub fn leaky_relu(x: &FrameTensor, slope: f32) -> Result<FrameTensor> {
    x.ensure_finite("leaky_relu")?;
    Ok(map(x, |v| if v >= 0.0 { v } else { v * slope }))
}

pub fn relu(x: &FrameTensor) -> Result<FrameTensor> {
    x.ensure_finite("relu")?;
    Ok(map(x, |v| v.max(0.0)))
}

pub fn tanh(x: &FrameTensor) -> Result<FrameTensor> {
    x.ensure_finite("tanh")?;
    Ok(map(x, f32::tanh))
}

/// Softmax over channels, independently for each frame.
pub fn softmax_channels(x: &FrameTensor) -> Result<FrameTensor> {
    x.ensure_finite("softmax_channels")?;
    let (channels, frames) = (x.channels(), x.frames());
    let mut out = FrameTensor::zeros(channels, frames);
    for t in 0..frames {
        let max = (0..channels)
            .map(|c| x.get(c, t))
            .fold(f32::NEG_INFINITY, f32::max);
        let mut sum = 0.0f64;
        for c in 0..channels {
            sum += ((x.get(c, t) - max) as f64).exp();
        }
        for c in 0..channels {
            let p = ((x.get(c, t) - max) as f64).exp() / sum;
            out.set(c, t, p as f32);
        }
    }
    if !out.is_finite() {
        return Err(Error::NonFinite {
            layer: "softmax_channels".into(),
        });
    }
    Ok(out)
}

pub(crate) fn map(x: &FrameTensor, f: impl Fn(f32) -> f32) -> FrameTensor {
    let data = x.data().iter().map(|&v| f(v)).collect();
    FrameTensor::from_vec(x.channels(), x.frames(), data).expect("same shape")
}
