//! Differentiable building blocks. Each layer exposes a forward pass and a
//! backward pass that maps the upstream gradient to input and parameter
//! gradients.

pub mod batchnorm;
pub mod conv;
pub mod dense;
pub mod dropout;
pub mod loss;
pub mod pool;
pub mod relu;

pub use batchnorm::{BatchNorm, BnCache};
pub use conv::{Conv3d, ConvGrads};
pub use dense::Dense;
pub use loss::{softmax, softmax_cross_entropy, CrossEntropy};
