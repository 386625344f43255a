use std::collections::HashSet;

use super::{Hierarchy, KnowledgeGraph};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkRole {
    Demonstration,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Link {
    pub entity: String,
    pub term: String,
    pub role: LinkRole,
}

/// One-to-one gold links, ordered by entity id. The first `shots` links are
/// demonstrations and the rest form the test set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentSet {
    links: Vec<Link>,
}

impl AlignmentSet {
    pub fn new(mut pairs: Vec<(String, String)>, shots: usize) -> Result<Self> {
        let mut entities = HashSet::new();
        let mut terms = HashSet::new();
        for (entity, term) in &pairs {
            if !entities.insert(entity.as_str()) {
                return Err(Error::OneToOne(format!("entity {entity:?} is linked twice")));
            }
            if !terms.insert(term.as_str()) {
                return Err(Error::OneToOne(format!("term {term:?} is linked twice")));
            }
        }
        if shots > pairs.len() {
            return Err(Error::Invalid(format!(
                "{shots} demonstrations requested but only {} links exist",
                pairs.len()
            )));
        }
        pairs.sort();
        let links = pairs
            .into_iter()
            .enumerate()
            .map(|(i, (entity, term))| Link {
                entity,
                term,
                role: if i < shots {
                    LinkRole::Demonstration
                } else {
                    LinkRole::Test
                },
            })
            .collect();
        Ok(AlignmentSet { links })
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn demonstrations(&self) -> impl Iterator<Item = &Link> {
        self.links.iter().filter(|l| l.role == LinkRole::Demonstration)
    }

    pub fn tests(&self) -> impl Iterator<Item = &Link> {
        self.links.iter().filter(|l| l.role == LinkRole::Test)
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Checks that every link points at a known entity and term.
    pub fn validate_against(&self, kg: &KnowledgeGraph, h: &Hierarchy) -> Result<()> {
        for link in &self.links {
            if kg.entity(&link.entity).is_none() {
                return Err(Error::UnknownEntity(link.entity.clone()));
            }
            if !h.contains(&link.term) {
                return Err(Error::UnknownTerm(link.term.clone()));
            }
        }
        Ok(())
    }
}
