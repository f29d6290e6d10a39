//! Transform-based tensor representation for multi-dimensional data completion.
//!
//! The crate provides the t-product algebra over order-3 tensors, a small
//! reverse-mode autodiff engine, untrained network priors (a U-Net latent
//! generator composed with a tube-wise transform network), their shallow
//! face-wise factorization variants, an Adam optimizer, a TNN/ADMM completion
//! baseline, PSNR/SSIM metrics and a binary tensor file format.

pub mod autodiff;
pub mod data;
pub mod error;
pub mod metrics;
pub mod nets;
pub mod optim;
pub mod recovery;
pub mod tensor;
pub mod tnn;

pub use error::{Error, Result};
pub use tensor::{ComplexTensor, DenseTensor, Shape};
