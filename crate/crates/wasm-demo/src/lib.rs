//! Browser demo over a built-in synthetic dataset: BM25 retrieval, prompt
//! assembly with a mock re-ranker, and hierarchy similarity between terms.
//!
//! [`Demo`] does the work and returns JSON strings so it can be tested
//! natively; [`Session`] is the JavaScript-facing wrapper.

use serde::Serialize;
use serde_json::json;
use taxalign::eval::{relevance_gain, wup, GainConfig};
use taxalign::kb::{AlignmentSet, Dataset, Entity};
use taxalign::llm::{complete, Backend, CompletionRequest, EchoMock, OracleMock, ReverseMock};
use taxalign::pipeline::CandidateSource;
use taxalign::prompting::{assemble_prompt, build_demonstration, parse_response, PromptConfig};
use taxalign::retriever::{Bm25Params, ExpansionConfig};
use wasm_bindgen::prelude::*;

pub const DEMO_TERMS: usize = 400;
pub const DEMO_ENTITIES: usize = 80;

type Out = Result<String, String>;

fn to_json(value: &impl Serialize) -> Out {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

pub struct Demo {
    data: Dataset,
    links: AlignmentSet,
    oracle: OracleMock,
}

#[derive(Serialize)]
struct Ranked {
    rank: usize,
    term_id: String,
    name: String,
    score: Option<f64>,
    gold: bool,
}

impl Demo {
    pub fn new(seed: u64) -> Result<Self, String> {
        let data = taxalign::synth::generate(seed, DEMO_TERMS, DEMO_ENTITIES).map_err(|e| e.to_string())?;
        let links = data.alignment(0).map_err(|e| e.to_string())?;
        let oracle = OracleMock::from_links(&data.kg, &data.hierarchy, &links);
        Ok(Demo { data, links, oracle })
    }

    fn entity(&self, id: &str) -> Result<&Entity, String> {
        self.data.kg.entity(id).ok_or_else(|| format!("unknown entity {id:?}"))
    }

    fn gold(&self, entity_id: &str) -> Option<&str> {
        self.links
            .links()
            .iter()
            .find(|l| l.entity == entity_id)
            .map(|l| l.term.as_str())
    }

    fn name(&self, term_id: &str) -> String {
        self.data.hierarchy.name(term_id).unwrap_or(term_id).to_string()
    }

    fn source(&self, expansion: &str, k1: f64, b: f64, topk: usize) -> Result<CandidateSource<'_>, String> {
        let expansion: ExpansionConfig = expansion.parse().map_err(|e: taxalign::Error| e.to_string())?;
        let params = Bm25Params::new(k1, b).map_err(|e| e.to_string())?;
        CandidateSource::new(&self.data.kg, &self.data.hierarchy, expansion, params, topk.max(1))
            .map_err(|e| e.to_string())
    }

    /// Entities with their gold term, and every term, for the pickers.
    pub fn catalog(&self) -> Out {
        let entities: Vec<_> = self
            .data
            .kg
            .entities()
            .map(|e| {
                json!({
                    "id": e.id,
                    "name": e.name,
                    "gold": self.gold(&e.id).map(|t| self.name(t)),
                })
            })
            .collect();
        let terms: Vec<_> = self
            .data
            .hierarchy
            .terms()
            .iter()
            .map(|t| json!({ "id": t.id, "name": t.name }))
            .collect();
        to_json(&json!({ "entities": entities, "terms": terms }))
    }

    /// BM25 top-K for one entity, with the query tokens that produced it.
    pub fn retrieve(&self, entity_id: &str, expansion: &str, k1: f64, b: f64, topk: usize) -> Out {
        let entity = self.entity(entity_id)?;
        let source = self.source(expansion, k1, b, topk)?;
        let gold = self.gold(entity_id);
        let list = source.candidates(entity);
        let items: Vec<Ranked> = list
            .items
            .iter()
            .enumerate()
            .map(|(i, s)| Ranked {
                rank: i + 1,
                name: self.name(&s.term_id),
                gold: Some(s.term_id.as_str()) == gold,
                term_id: s.term_id.clone(),
                score: Some(s.score),
            })
            .collect();
        to_json(&json!({
            "query": source.query(entity),
            "fallback": source.retrieve(entity).is_empty(),
            "gold": gold.map(|t| self.name(t)),
            "items": items,
        }))
    }

    /// Assembles the prompt for one entity, answers it with a mock and
    /// parses the answer back into a ranking.
    pub fn rerank(&self, entity_id: &str, shots: usize, context: bool, topk: usize, mock: &str) -> Out {
        let entity = self.entity(entity_id)?;
        let h = &self.data.hierarchy;
        let source = self.source("atr+str", 1.2, 0.75, topk)?;
        let backend: &dyn Backend = match mock {
            "echo" => &EchoMock,
            "reverse" => &ReverseMock,
            "oracle" => &self.oracle,
            other => return Err(format!("unknown mock {other:?}")),
        };
        // the demonstration is the first other linked entity
        let demos = if shots == 0 {
            Vec::new()
        } else {
            let link = self
                .links
                .links()
                .iter()
                .find(|l| l.entity != entity_id)
                .ok_or("no other linked entity for a demonstration")?;
            let demo_entity = self.entity(&link.entity)?;
            vec![
                build_demonstration(&demo_entity.name, &link.term, &source.candidates(demo_entity), h)
                    .map_err(|e| e.to_string())?,
            ]
        };
        let cfg = PromptConfig {
            shots: demos.len(),
            hierarchy_context: context,
            ..PromptConfig::default()
        };
        let mut candidates = source.candidates(entity);
        let prompt = assemble_prompt(&cfg, &demos, &entity.name, &candidates, h).map_err(|e| e.to_string())?;
        let completion = complete(
            backend,
            &CompletionRequest::new(format!("{mock}-mock"), prompt.text.clone()),
        )
        .map_err(|e| e.to_string())?;
        candidates.items.truncate(prompt.candidates.len());
        let parsed = parse_response(&completion, &candidates, h);
        let gold = self.gold(entity_id);
        let ranking: Vec<Ranked> = parsed
            .ordered
            .iter()
            .enumerate()
            .map(|(i, t)| Ranked {
                rank: i + 1,
                name: self.name(t),
                gold: Some(t.as_str()) == gold,
                term_id: t.clone(),
                score: None,
            })
            .collect();
        to_json(&json!({
            "prompt": prompt.text,
            "completion": completion,
            "ranking": ranking,
            "unmatched": parsed.unmatched_outputs,
            "appended": parsed.appended,
        }))
    }

    /// Wu-Palmer score and graded relevance between two terms.
    pub fn compare(&self, a: &str, b: &str) -> Out {
        let h = &self.data.hierarchy;
        let err = |e: taxalign::Error| e.to_string();
        let gain = GainConfig::default();
        let path = |id: &str| -> Result<Vec<String>, String> {
            // one shortest chain of names from a top-level term down to `id`
            let mut chain = vec![self.name(id)];
            let mut at = id.to_string();
            loop {
                let parents = h.parents(&at).map_err(err)?;
                let Some(next) = parents.into_iter().min_by_key(|p| h.depth(p).unwrap_or(u32::MAX)) else {
                    break;
                };
                chain.push(self.name(next));
                at = next.to_string();
            }
            chain.reverse();
            Ok(chain)
        };
        to_json(&json!({
            "wup": wup(h, a, b).map_err(err)?,
            "gain": relevance_gain(h, a, b, &gain).map_err(err)?,
            "depth_a": h.depth(a).map_err(err)?,
            "depth_b": h.depth(b).map_err(err)?,
            "path_a": path(a)?,
            "path_b": path(b)?,
        }))
    }
}

#[wasm_bindgen]
pub struct Session(Demo);

#[wasm_bindgen]
impl Session {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32) -> Result<Session, JsError> {
        Demo::new(u64::from(seed)).map(Session).map_err(|e| JsError::new(&e))
    }

    pub fn catalog(&self) -> Result<String, JsError> {
        self.0.catalog().map_err(|e| JsError::new(&e))
    }

    pub fn retrieve(&self, entity_id: &str, expansion: &str, k1: f64, b: f64, topk: u32) -> Result<String, JsError> {
        self.0
            .retrieve(entity_id, expansion, k1, b, topk as usize)
            .map_err(|e| JsError::new(&e))
    }

    pub fn rerank(&self, entity_id: &str, shots: u32, context: bool, topk: u32, mock: &str) -> Result<String, JsError> {
        self.0
            .rerank(entity_id, shots as usize, context, topk as usize, mock)
            .map_err(|e| JsError::new(&e))
    }

    pub fn compare(&self, a: &str, b: &str) -> Result<String, JsError> {
        self.0.compare(a, b).map_err(|e| JsError::new(&e))
    }
}
