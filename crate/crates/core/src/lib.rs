//! Probing sentence encoders with templated corpora and pairwise regression.
//!
//! A corpus is generated from a template, each sentence pair is coded for
//! which structural features the two sentences share, and the z-scored
//! cosine similarity of their embeddings is regressed on those codes.

pub mod corpus;
pub mod error;
pub mod harness;
pub mod numeric;
pub mod oracle;
pub mod paircode;
pub mod regress;
pub mod similarity;

pub use error::{Error, Result};
