//! Coarse candidate retrieval: expanded term documents and entity queries
//! scored with Okapi BM25.

mod bm25;
mod expansion;

pub use crate::text::tokenize;
pub use bm25::{Bm25Index, Bm25Params};
pub use expansion::{build_entity_query, build_term_document, ExpansionConfig, MAX_QUERY_NEIGHBORS};

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredTerm {
    pub term_id: String,
    pub score: f64,
}

/// Top-K candidates for one entity, best first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedList {
    pub entity_id: String,
    pub items: Vec<ScoredTerm>,
    pub k: usize,
}

impl RankedList {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn term_ids(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|item| item.term_id.as_str())
    }

    /// 1-based rank of `term_id`, if present.
    pub fn rank_of(&self, term_id: &str) -> Option<usize> {
        self.items.iter().position(|i| i.term_id == term_id).map(|p| p + 1)
    }
}
