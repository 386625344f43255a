//! Re-ranking prompts and the mapping from completions back to candidates.
//!
//! A prompt is a task description, one block per demonstration, and a test
//! block whose `Answer:` is left open for the model:
//!
//! ```text
//! <task description>
//!
//! Query: golden retriever
//! Choices: dog; cat; bird
//! Answer: dog; cat; bird
//!
//! Query: typhus, epidemic louse-borne
//! Choices: epidemic typhus; typhus; murine typhus
//! Contexts: {epidemic typhus isA typhus; murine typhus isA typhus}
//! Answer:
//! ```

mod parse;
mod template;

use std::collections::{BTreeMap, HashMap};

pub use parse::{parse_response, ParsedRanking};
pub use template::{
    assemble_prompt, build_context_string, build_demonstration, build_pseudo_demonstration, Demonstration, Prompt,
    PromptConfig, DEFAULT_TASK_DESCRIPTION, DEFAULT_TOKEN_BUDGET, MIN_CANDIDATES, MIN_TOKEN_BUDGET,
};

use crate::kb::Hierarchy;

/// Display names (and optional synonyms) for candidate term ids.
pub trait CandidateNames {
    fn name(&self, id: &str) -> Option<&str>;

    fn synonyms(&self, _id: &str) -> &[String] {
        &[]
    }

    /// Name for display, falling back to the id itself.
    fn display<'a>(&'a self, id: &'a str) -> &'a str {
        self.name(id).unwrap_or(id)
    }
}

impl CandidateNames for Hierarchy {
    fn name(&self, id: &str) -> Option<&str> {
        Hierarchy::name(self, id)
    }

    fn synonyms(&self, id: &str) -> &[String] {
        self.term(id).map_or(&[], |t| t.synonyms.as_slice())
    }
}

impl CandidateNames for HashMap<String, String> {
    fn name(&self, id: &str) -> Option<&str> {
        self.get(id).map(String::as_str)
    }
}

impl CandidateNames for BTreeMap<String, String> {
    fn name(&self, id: &str) -> Option<&str> {
        self.get(id).map(String::as_str)
    }
}
