//! Layer kit with hand-written backward passes: strided convolution, batch
//! normalization, ReLU, global average pooling, a dense head, softmax
//! cross-entropy and Adam.

mod activation;
mod adam;
mod batchnorm;
pub mod checkpoint;
mod conv;
mod dense;
pub mod gradcheck;
mod loss;
mod real;
mod tensor;

pub use activation::{gap_backward, gap_forward, relu_backward, relu_forward};
pub use adam::Adam;
pub use batchnorm::{BatchNorm2d, BnCache, BnGrads, Mode, BN_EPSILON, BN_MOMENTUM};
pub use conv::{conv_out_dim, Conv2d, ConvCache, ConvGrads, Padding};
pub use dense::{Dense, DenseGrads};
pub use loss::{batch_cross_entropy, softmax, softmax_cross_entropy, SoftmaxCe};
pub use real::Real;
pub use tensor::{Param, Tensor4};
