use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kb::{Entity, Hierarchy, KnowledgeGraph, Term};
use crate::text::tokenize;

/// Cap on the neighbour names added to an entity query.
pub const MAX_QUERY_NEIGHBORS: usize = 32;

/// Which extra text is folded into queries and documents.
///
/// Attributes are synonyms and the definition. Structure is the names of
/// 1-hop graph neighbours for entities, and of direct parents and children
/// for terms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ExpansionConfig {
    pub use_attributes: bool,
    pub use_structure: bool,
}

impl ExpansionConfig {
    pub const NAME: Self = Self::new(false, false);
    pub const ATTRIBUTES: Self = Self::new(true, false);
    pub const STRUCTURE: Self = Self::new(false, true);
    pub const FULL: Self = Self::new(true, true);

    pub const fn new(use_attributes: bool, use_structure: bool) -> Self {
        ExpansionConfig {
            use_attributes,
            use_structure,
        }
    }

    pub const ALL: [Self; 4] = [Self::NAME, Self::ATTRIBUTES, Self::STRUCTURE, Self::FULL];
}

impl fmt::Display for ExpansionConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match (self.use_attributes, self.use_structure) {
            (false, false) => "name",
            (true, false) => "atr",
            (false, true) => "str",
            (true, true) => "atr+str",
        })
    }
}

impl FromStr for ExpansionConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "name" => Ok(Self::NAME),
            "atr" => Ok(Self::ATTRIBUTES),
            "str" => Ok(Self::STRUCTURE),
            "atr+str" | "str+atr" => Ok(Self::FULL),
            other => Err(Error::Invalid(format!(
                "expansion must be one of name, atr, str, atr+str; got {other:?}"
            ))),
        }
    }
}

fn push_attributes(out: &mut Vec<String>, synonyms: &[String], definition: Option<&str>) {
    for synonym in synonyms {
        out.extend(tokenize(synonym));
    }
    if let Some(def) = definition {
        out.extend(tokenize(def));
    }
}

/// Token document for `term`: name, then synonyms and definition, then the
/// names of its direct parents and children (each group in id order).
pub fn build_term_document(term: &Term, h: &Hierarchy, cfg: ExpansionConfig) -> Vec<String> {
    let mut out = tokenize(&term.name);
    if cfg.use_attributes {
        push_attributes(&mut out, &term.synonyms, term.definition.as_deref());
    }
    if cfg.use_structure {
        if let Ok(i) = h.index_of(&term.id) {
            let terms = h.terms();
            for &p in h.parent_indices(i) {
                out.extend(tokenize(&terms[p].name));
            }
            for &c in h.child_indices(i) {
                out.extend(tokenize(&terms[c].name));
            }
        }
    }
    out
}

/// Token query for `entity`: name, then synonyms and definition, then the
/// names of up to [`MAX_QUERY_NEIGHBORS`] graph neighbours in id order.
pub fn build_entity_query(entity: &Entity, kg: &KnowledgeGraph, cfg: ExpansionConfig) -> Vec<String> {
    let mut out = tokenize(&entity.name);
    if cfg.use_attributes {
        push_attributes(&mut out, &entity.synonyms, entity.definition.as_deref());
    }
    if cfg.use_structure {
        for id in kg.neighbors(&entity.id).take(MAX_QUERY_NEIGHBORS) {
            if let Some(n) = kg.entity(id) {
                out.extend(tokenize(&n.name));
            }
        }
    }
    out
}
