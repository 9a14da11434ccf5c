//! Hashtag annotation and extraction for disaster tweets.
//!
//! The crate covers the whole pipeline: corpus ingestion and relevance
//! filtering ([`ingest`]), tokenization and hashtag segmentation
//! ([`textnorm`]), lexicon-driven gold annotation ([`annotate`]), per-token
//! feature construction ([`features`]), the joint-layer Bi-LSTM tagger
//! ([`tagger`]), span scoring ([`eval`]) and the command implementations
//! used by the `disaster-tagger` binary ([`commands`]). [`synth`] generates
//! template benchmarks for end-to-end runs.

pub mod annotate;
pub mod commands;
pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod nn;
pub mod synth;
pub mod tagger;
pub mod textnorm;

pub use error::{Error, Result};
