//! Lipschitz-certified neural networks with polyactivations.

pub mod activations;
pub mod cli;
pub mod data;
pub mod error;
pub mod linalg;
pub mod network;
pub mod robustness;
pub mod training;
pub mod verification;

pub use error::{Error, Result};
