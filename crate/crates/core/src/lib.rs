//! Entropy-gated tree decoding over pluggable autoregressive models.
//!
//! A [`model::LanguageModel`] scores token prefixes. [`tree::decode_tree`]
//! grows a decoding tree that forks only where the next-token distribution
//! is uncertain and the likely token matters, and [`eval`] compares the
//! resulting leaves against independent sampling with pass@k and
//! uncertainty AUROC.

pub mod cli;
pub mod error;
pub mod eval;
pub mod io;
pub mod model;
pub mod sampling;
pub mod seed;
pub mod tree;
pub mod uncertainty;

pub use error::{Error, Result};
