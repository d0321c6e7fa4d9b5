//! Numeric primitives the network stages are built from.

pub mod activation;
pub mod conv;
mod micro;
pub mod norm;

pub use activation::{leaky_relu, relu, softmax_channels, tanh, LRELU_SLOPE};
pub use conv::{
    causal_conv1d, causal_upsample_conv1d, CausalConv1d, CausalUpsampleConv1d, ConvSpec, ConvState,
};
pub use norm::{causal_instance_norm, layer_norm_frame, CumulativeNormState, NORM_EPS};
