use std::collections::HashMap;

use super::{Backend, CompletionRequest, LlmError};
use crate::kb::{AlignmentSet, Hierarchy, KnowledgeGraph};

/// Value of the last line of `prompt` starting with `label`.
fn last_field<'a>(prompt: &'a str, label: &str) -> Option<&'a str> {
    prompt
        .lines()
        .rev()
        .find_map(|line| line.strip_prefix(label))
        .map(str::trim)
}

fn choices(prompt: &str) -> Result<Vec<&str>, LlmError> {
    let line =
        last_field(prompt, "Choices:").ok_or_else(|| LlmError::InvalidRequest("prompt has no Choices line".into()))?;
    Ok(line.split(';').map(str::trim).filter(|s| !s.is_empty()).collect())
}

/// Returns the test block's choices unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct EchoMock;

impl Backend for EchoMock {
    fn name(&self) -> &str {
        "echo-mock"
    }

    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        Ok(choices(&req.prompt)?.join("; "))
    }
}

/// Returns the test block's choices in reverse.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReverseMock;

impl Backend for ReverseMock {
    fn name(&self) -> &str {
        "reverse-mock"
    }

    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        let mut items = choices(&req.prompt)?;
        items.reverse();
        Ok(items.join("; "))
    }
}

/// Knows the gold term name for each query text and moves it to the front
/// when it is among the choices; otherwise echoes.
#[derive(Debug, Clone, Default)]
pub struct OracleMock {
    gold: HashMap<String, String>,
}

impl OracleMock {
    pub fn new(gold: HashMap<String, String>) -> Self {
        OracleMock { gold }
    }

    /// Gold map keyed by entity name, from every link in `links`.
    pub fn from_links(kg: &KnowledgeGraph, h: &Hierarchy, links: &AlignmentSet) -> Self {
        let gold = links
            .links()
            .iter()
            .filter_map(|l| Some((kg.entity(&l.entity)?.name.clone(), h.name(&l.term)?.to_string())))
            .collect();
        OracleMock { gold }
    }
}

impl Backend for OracleMock {
    fn name(&self) -> &str {
        "oracle-mock"
    }

    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        let mut items = choices(&req.prompt)?;
        let gold = last_field(&req.prompt, "Query:").and_then(|q| self.gold.get(q));
        if let Some(at) = gold.and_then(|g| items.iter().position(|c| c == g)) {
            let g = items.remove(at);
            items.insert(0, g);
        }
        Ok(items.join("; "))
    }
}
