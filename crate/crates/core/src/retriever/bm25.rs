use std::cmp::Ordering;
use std::collections::HashMap;

use super::expansion::{build_term_document, ExpansionConfig};
use super::{RankedList, ScoredTerm};
use crate::error::{Error, Result};
use crate::kb::Hierarchy;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    /// Term-frequency saturation.
    pub k1: f64,
    /// Length normalization, in `[0, 1]`.
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self> {
        if !(k1.is_finite() && k1 > 0.0) {
            return Err(Error::Invalid(format!("k1 must be positive, got {k1}")));
        }
        if !(0.0..=1.0).contains(&b) {
            return Err(Error::Invalid(format!("b must lie in [0, 1], got {b}")));
        }
        Ok(Bm25Params { k1, b })
    }
}

/// Inverted index over token documents.
///
/// Posting lists are sorted by document number. Documents are numbered in
/// the order they were supplied.
#[derive(Debug, Clone)]
pub struct Bm25Index {
    params: Bm25Params,
    doc_ids: Vec<String>,
    doc_numbers: HashMap<String, u32>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
    postings: HashMap<String, Vec<(u32, u32)>>,
}

impl Bm25Index {
    pub fn from_documents(docs: Vec<(String, Vec<String>)>, params: Bm25Params) -> Result<Self> {
        let params = Bm25Params::new(params.k1, params.b)?;
        let mut doc_ids = Vec::with_capacity(docs.len());
        let mut doc_numbers = HashMap::with_capacity(docs.len());
        let mut doc_lengths = Vec::with_capacity(docs.len());
        let mut postings: HashMap<String, Vec<(u32, u32)>> = HashMap::new();
        for (n, (id, tokens)) in docs.into_iter().enumerate() {
            let n = n as u32;
            if doc_numbers.insert(id.clone(), n).is_some() {
                return Err(Error::DuplicateId(id));
            }
            let mut counts: HashMap<String, u32> = HashMap::new();
            for token in &tokens {
                *counts.entry(token.clone()).or_default() += 1;
            }
            for (token, tf) in counts {
                postings.entry(token).or_default().push((n, tf));
            }
            doc_ids.push(id);
            doc_lengths.push(tokens.len() as u32);
        }
        let total: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
        let avg_doc_length = if doc_lengths.is_empty() {
            0.0
        } else {
            total as f64 / doc_lengths.len() as f64
        };
        Ok(Bm25Index {
            params,
            doc_ids,
            doc_numbers,
            doc_lengths,
            avg_doc_length,
            postings,
        })
    }

    /// One document per hierarchy term, in term id order.
    pub fn build(h: &Hierarchy, cfg: ExpansionConfig, params: Bm25Params) -> Result<Self> {
        if h.is_empty() {
            return Err(Error::Invalid("cannot index an empty hierarchy".into()));
        }
        let docs = h
            .terms()
            .iter()
            .map(|t| (t.id.clone(), build_term_document(t, h, cfg)))
            .collect();
        Self::from_documents(docs, params)
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_length(&self, doc_id: &str) -> Option<u32> {
        self.doc_numbers.get(doc_id).map(|&n| self.doc_lengths[n as usize])
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    /// Number of documents containing `token`.
    pub fn doc_frequency(&self, token: &str) -> usize {
        self.postings.get(token).map_or(0, Vec::len)
    }

    pub fn idf(&self, token: &str) -> f64 {
        let n = self.doc_ids.len() as f64;
        let df = self.doc_frequency(token) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    fn contribution(&self, idf: f64, tf: u32, doc: u32) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let tf = f64::from(tf);
        let len = f64::from(self.doc_lengths[doc as usize]);
        idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len / self.avg_doc_length))
    }

    /// BM25 score of one document. Repeated query tokens count once per
    /// occurrence.
    pub fn score(&self, query: &[String], doc_id: &str) -> Result<f64> {
        let doc = *self
            .doc_numbers
            .get(doc_id)
            .ok_or_else(|| Error::UnknownTerm(doc_id.to_string()))?;
        let mut total = 0.0;
        for token in query {
            let Some(list) = self.postings.get(token) else {
                continue;
            };
            if let Ok(at) = list.binary_search_by_key(&doc, |&(d, _)| d) {
                total += self.contribution(self.idf(token), list[at].1, doc);
            }
        }
        Ok(total)
    }

    /// Top `k` documents by score, ties broken by ascending id. Documents
    /// scoring zero are never returned, so the list can be shorter than `k`.
    pub fn retrieve(&self, entity_id: &str, query: &[String], k: usize) -> RankedList {
        let mut scores: HashMap<u32, f64> = HashMap::new();
        for token in query {
            let Some(list) = self.postings.get(token) else {
                continue;
            };
            let idf = self.idf(token);
            for &(doc, tf) in list {
                *scores.entry(doc).or_insert(0.0) += self.contribution(idf, tf, doc);
            }
        }
        let mut ranked: Vec<(u32, f64)> = scores.into_iter().filter(|&(_, s)| s > 0.0).collect();
        ranked.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then_with(|| self.doc_ids[a.0 as usize].cmp(&self.doc_ids[b.0 as usize]))
        });
        ranked.truncate(k);
        RankedList {
            entity_id: entity_id.to_string(),
            items: ranked
                .into_iter()
                .map(|(doc, score)| ScoredTerm {
                    term_id: self.doc_ids[doc as usize].clone(),
                    score,
                })
                .collect(),
            k,
        }
    }
}
