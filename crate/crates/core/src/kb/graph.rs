use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::dedup_folded;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub synonyms: Vec<String>,
    #[serde(default)]
    pub definition: Option<String>,
    #[serde(default)]
    pub types: Vec<String>,
}

impl Entity {
    pub fn new(id: impl Into<String>, name: impl Into<String>) -> Self {
        Entity {
            id: id.into(),
            name: name.into(),
            synonyms: Vec::new(),
            definition: None,
            types: Vec::new(),
        }
    }

    /// Checks the id and name and removes case-insensitive synonym duplicates.
    pub(crate) fn normalized(mut self) -> Result<Self> {
        if self.id.trim().is_empty() {
            return Err(Error::Invalid("entity with empty id".into()));
        }
        if self.name.trim().is_empty() {
            return Err(Error::Invalid(format!("entity {:?} has an empty name", self.id)));
        }
        self.synonyms = dedup_folded(self.synonyms);
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationTriple {
    pub head: String,
    pub relation: String,
    pub tail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeGraph {
    entities: BTreeMap<String, Entity>,
    triples: Vec<RelationTriple>,
    neighbors: BTreeMap<String, BTreeSet<String>>,
}

impl KnowledgeGraph {
    pub fn new(entities: Vec<Entity>, triples: Vec<RelationTriple>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for entity in entities {
            let entity = entity.normalized()?;
            if map.contains_key(&entity.id) {
                return Err(Error::DuplicateId(entity.id));
            }
            map.insert(entity.id.clone(), entity);
        }
        let mut neighbors: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for triple in &triples {
            for id in [&triple.head, &triple.tail] {
                if !map.contains_key(id) {
                    return Err(Error::UnknownEntity(id.clone()));
                }
            }
            if triple.head != triple.tail {
                neighbors
                    .entry(triple.head.clone())
                    .or_default()
                    .insert(triple.tail.clone());
                neighbors
                    .entry(triple.tail.clone())
                    .or_default()
                    .insert(triple.head.clone());
            }
        }
        Ok(KnowledgeGraph {
            entities: map,
            triples,
            neighbors,
        })
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.get(id)
    }

    /// Entities in id order.
    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.entities.values()
    }

    pub fn triples(&self) -> &[RelationTriple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    /// Ids of entities sharing at least one triple with `id`, in either
    /// direction, sorted.
    pub fn neighbors(&self, id: &str) -> impl Iterator<Item = &str> {
        self.neighbors
            .get(id)
            .into_iter()
            .flat_map(|set| set.iter().map(String::as_str))
    }

    /// Number of entities carrying `ty` among their semantic types
    /// (case-insensitive).
    pub fn count_typed(&self, ty: &str) -> usize {
        let ty = crate::text::fold(ty);
        self.entities
            .values()
            .filter(|e| e.types.iter().any(|t| crate::text::fold(t) == ty))
            .count()
    }
}
