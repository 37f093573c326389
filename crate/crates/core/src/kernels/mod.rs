//! Convolution primitives under the INP/ACT precision contract, plus the
//! reverse-mode gradients used by training.

mod activation;
mod backward;
mod conv;
mod precision;

pub use activation::{gated_unit, relu, sigmoid, softmax, softmax_sample};
pub(crate) use activation::gate;
pub use backward::{conv1d_backward, conv_transpose1d_backward, ConvGrads};
pub(crate) use backward::accumulate_pointwise_grads;
pub use conv::{conv1d, conv_transpose1d, upsample_trim, ConvInt8, PreparedConv};
pub use precision::{accumulate, PrecisionContext, INT_ACCUMULATOR_BITS};
