//! Numeric building blocks: tensors, dilated causal convolutions, gated
//! activations, dense layers, Adam, and a finite-difference gradient oracle.

mod activation;
mod adam;
mod conv;
mod dense;
mod gradcheck;
mod params;
mod tensor;

pub use activation::{gated_activation, gated_activation_backward, sigmoid};
pub(crate) use activation::{gate_backward, gate_forward};
pub use adam::{AdamConfig, AdamState};
pub use conv::{causal_conv1d, causal_conv1d_backward, ConvGrad, ConvParams};
pub(crate) use conv::{accumulate_conv1d_backward, accumulate_strided_conv1d_backward, strided_conv1d};
pub use dense::{dense, dense_backward, DenseGrad, DenseParams};
pub use gradcheck::{
    finite_diff_grad, max_relative_error, relative_error, DEFAULT_EPS, RELATIVE_ERROR_FLOOR,
};
pub use params::{GradientSet, ParamSet};
pub use tensor::Tensor;
