//! Attribute filtering for speaker embeddings.
//!
//! An attribute-conditioned product-quantized VQ-VAE removes or replaces a
//! binary or continuous attribute in fixed-size embeddings. Training combines
//! reconstruction, codebook diversity, a frozen angular-margin speaker head,
//! a gradient-reversed adversary and a k-NN mutual-information penalty.
//! [`attackkit`] simulates attackers and scores privacy and utility.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the 64-bit width used by the pipeline.

pub mod attackkit;
pub mod datakit;
pub mod diffcore;
pub mod error;
pub mod filtermodel;
pub mod miest;
pub mod scalar;
pub mod special;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Tensor = diffcore::Tensor<f64>;
pub type Graph = diffcore::Graph<f64>;
