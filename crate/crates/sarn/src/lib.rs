//! Sequential-attention relational reasoning on a synthetic visual QA task.
//!
//! The crate is self-contained: a small reverse-mode autodiff engine
//! ([`tensor`]), a deterministic scene/question generator with a geometric
//! answer oracle ([`dataset`]), three model architectures built on the engine
//! ([`models`]), a training and evaluation harness ([`train`]), and
//! interpretability exports ([`introspect`]).
//!
//! Everything is reproducible by construction: all randomness flows through
//! the pinned [`rng::Pcg32`] generator, floating-point reductions have fixed
//! summation order, and on-disk formats are exact little-endian layouts.

pub(crate) mod bytes;
pub mod dataset;
pub mod error;
pub mod introspect;
pub mod models;
pub mod rng;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
