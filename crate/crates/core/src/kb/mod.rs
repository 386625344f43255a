//! Knowledge graph, term hierarchy and gold entity-term links.
//!
//! Both graphs are immutable once built and can be shared freely between
//! threads. Every set that gets linearized (parents, neighbours, links) is
//! ordered by id so runs are reproducible.

mod graph;
mod hierarchy;
mod io;
mod links;

pub use graph::{Entity, KnowledgeGraph, RelationTriple};
pub use hierarchy::{DepthConvention, Hierarchy, Term, ROOT_ID};
pub use io::{
    load_hierarchy, load_kg, load_link_pairs, load_links, write_entities, write_links, write_pairs, write_terms,
    write_triples, Dataset, DatasetPaths,
};
pub use links::{AlignmentSet, Link, LinkRole};

use crate::text::fold;

/// Drops empty strings and case-insensitive duplicates, keeping the first
/// spelling seen.
pub(crate) fn dedup_folded(items: Vec<String>) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    items
        .into_iter()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty() && seen.insert(fold(s)))
        .collect()
}
