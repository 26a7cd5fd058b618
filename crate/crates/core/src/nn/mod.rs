//! Dense tensors and convolution primitives with exact backward passes.

pub(crate) mod conv;
mod ops;
mod tensor;

pub use conv::{conv2d_same, conv2d_same_backward, ConvGrads, ConvKernel};
pub use ops::{add, add_assign, concat_channels, relu, relu_backward, split_channels};
pub use tensor::{Real, Tensor};
