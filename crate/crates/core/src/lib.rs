//! Referring expression generation from delexicalized discourse context.
//!
//! The crate covers the whole pipeline: extracting referring expressions from
//! aligned template/text pairs ([`corpus`]), the attention-decoder generator
//! and its training loop ([`model`]), two non-neural comparison systems
//! ([`baselines`]) and automatic metrics with paired significance tests
//! ([`eval`]). The [`tensor`] module is the small differentiation engine the
//! generator is built on.

pub mod baselines;
pub mod corpus;
pub mod eval;
pub mod error;
pub mod model;
pub mod par;
pub mod tensor;

pub use error::{Error, Result};
pub use par::Execution;
