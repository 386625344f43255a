//! Alignment of knowledge-graph entities to the most specific term of a
//! term hierarchy.
//!
//! The pipeline has two stages. A BM25 retriever over expanded term
//! documents produces a coarse top-K candidate list for every entity, and a
//! completion model re-ranks that list from a prompt carrying a task
//! description, demonstrations and optional `isA` hierarchy context.
//! Offline mock backends make the whole pipeline reproducible without a
//! model endpoint.
//!
//! Module map:
//!
//! * [`kb`] knowledge graph, hierarchy and gold links
//! * [`retriever`] tokenization, expansion, BM25 index and top-K retrieval
//! * [`prompting`] prompt assembly and completion parsing
//! * [`llm`] completion backends, throttling and the response cache
//! * [`eval`] ranking metrics and the edit-distance baseline
//! * [`pipeline`] run configuration, end-to-end runs and baselines
//! * [`synth`] seeded synthetic datasets

pub mod error;
pub mod eval;
mod fsutil;
pub mod kb;
pub mod llm;
pub mod pipeline;
pub mod prompting;
pub mod retriever;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
