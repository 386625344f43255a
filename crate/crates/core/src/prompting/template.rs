use serde::Serialize;

use super::CandidateNames;
use crate::error::{Error, Result};
use crate::kb::Hierarchy;
use crate::retriever::RankedList;
use crate::text::word_count;

pub const DEFAULT_TASK_DESCRIPTION: &str = "You are given a query biomedical entity and a list of candidate terms from a disease hierarchy. Rank all candidates from the most specific correct term for the query to the least relevant. Output the ranked names separated by '; '.";

/// Default prompt budget in whitespace-separated words.
pub const DEFAULT_TOKEN_BUDGET: usize = 3500;
pub const MIN_TOKEN_BUDGET: usize = 256;
/// Truncation never drops the candidate list below this length.
pub const MIN_CANDIDATES: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptConfig {
    /// Number of real demonstrations; zero switches to the pseudo one.
    pub shots: usize,
    pub hierarchy_context: bool,
    pub task_description: String,
    pub token_budget: usize,
}

impl Default for PromptConfig {
    fn default() -> Self {
        PromptConfig {
            shots: 0,
            hierarchy_context: true,
            task_description: DEFAULT_TASK_DESCRIPTION.to_string(),
            token_budget: DEFAULT_TOKEN_BUDGET,
        }
    }
}

impl PromptConfig {
    pub fn validate(&self) -> Result<()> {
        if self.token_budget < MIN_TOKEN_BUDGET {
            return Err(Error::Invalid(format!(
                "token budget must be at least {MIN_TOKEN_BUDGET}, got {}",
                self.token_budget
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Demonstration {
    pub query: String,
    pub choices: Vec<String>,
    pub answer: Vec<String>,
    pub pseudo: bool,
}

impl Demonstration {
    pub fn render(&self) -> String {
        format!(
            "Query: {}\nChoices: {}\nAnswer: {}",
            self.query,
            self.choices.join("; "),
            self.answer.join("; ")
        )
    }
}

/// Demonstration from a labelled link. The gold term takes the last slot of
/// the choices when the retriever missed it, and always leads the answer.
pub fn build_demonstration(
    entity_name: &str,
    gold_term: &str,
    candidates: &RankedList,
    names: &impl CandidateNames,
) -> Result<Demonstration> {
    if candidates.is_empty() {
        return Err(Error::Invalid(format!(
            "no candidates to build a demonstration for {:?}",
            candidates.entity_id
        )));
    }
    let mut ids: Vec<&str> = candidates.term_ids().collect();
    if !ids.contains(&gold_term) {
        if ids.len() >= candidates.k.max(1) {
            ids.pop();
        }
        ids.push(gold_term);
    }
    let answer = std::iter::once(gold_term)
        .chain(ids.iter().copied().filter(|&id| id != gold_term))
        .map(|id| names.display(id).to_string())
        .collect();
    Ok(Demonstration {
        query: entity_name.to_string(),
        choices: ids.iter().map(|&id| names.display(id).to_string()).collect(),
        answer,
        pseudo: false,
    })
}

/// Fixed out-of-domain example that only shows the answer format.
pub fn build_pseudo_demonstration() -> Demonstration {
    let items: Vec<String> = ["dog", "cat", "bird"].map(String::from).to_vec();
    Demonstration {
        query: "golden retriever".into(),
        choices: items.clone(),
        answer: items,
        pseudo: true,
    }
}

fn context_clauses(candidate_ids: &[&str], h: &Hierarchy) -> Vec<String> {
    let mut clauses = Vec::new();
    for &id in candidate_ids {
        let child = h.display(id);
        for parent in h.parents(id).unwrap_or_default() {
            clauses.push(format!("{child} isA {}", h.display(parent)));
        }
    }
    clauses
}

/// `Contexts: {x isA y; ...}` with one clause per candidate and direct
/// parent. Candidates directly under the virtual root add nothing.
pub fn build_context_string(candidates: &RankedList, h: &Hierarchy) -> String {
    let ids: Vec<&str> = candidates.term_ids().collect();
    format!("Contexts: {{{}}}", context_clauses(&ids, h).join("; "))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Prompt {
    pub text: String,
    /// Candidate ids encoded in the test block, after any truncation.
    pub candidates: Vec<String>,
}

fn render_prompt(
    cfg: &PromptConfig,
    demos: &[Demonstration],
    test_entity: &str,
    ids: &[&str],
    h: &Hierarchy,
) -> String {
    let mut blocks = Vec::with_capacity(demos.len() + 2);
    blocks.push(cfg.task_description.trim_end().to_string());
    blocks.extend(demos.iter().map(Demonstration::render));
    let choices: Vec<&str> = ids.iter().map(|&id| h.display(id)).collect();
    let mut test = format!("Query: {test_entity}\nChoices: {}\n", choices.join("; "));
    if cfg.hierarchy_context {
        test.push_str(&format!("Contexts: {{{}}}\n", context_clauses(ids, h).join("; ")));
    }
    test.push_str("Answer:");
    blocks.push(test);
    blocks.join("\n\n")
}

/// Lays out the full prompt. With `shots == 0` the pseudo demonstration is
/// used and `demos` must be empty; otherwise exactly `shots` real
/// demonstrations are required. Over budget, candidates are dropped from
/// the tail down to [`MIN_CANDIDATES`].
pub fn assemble_prompt(
    cfg: &PromptConfig,
    demos: &[Demonstration],
    test_entity: &str,
    candidates: &RankedList,
    h: &Hierarchy,
) -> Result<Prompt> {
    cfg.validate()?;
    if candidates.is_empty() {
        return Err(Error::Invalid(format!(
            "no candidates to rank for {:?}",
            candidates.entity_id
        )));
    }
    let pseudo;
    let demos = if cfg.shots == 0 {
        if !demos.is_empty() {
            return Err(Error::Invalid("zero-shot prompts take no real demonstrations".into()));
        }
        pseudo = [build_pseudo_demonstration()];
        &pseudo[..]
    } else {
        if demos.len() != cfg.shots || demos.iter().any(|d| d.pseudo) {
            return Err(Error::Invalid(format!(
                "expected {} real demonstrations, got {}",
                cfg.shots,
                demos.iter().filter(|d| !d.pseudo).count()
            )));
        }
        demos
    };

    let ids: Vec<&str> = candidates.term_ids().collect();
    let floor = ids.len().min(MIN_CANDIDATES);
    let mut n = ids.len();
    loop {
        let text = render_prompt(cfg, demos, test_entity, &ids[..n], h);
        let words = word_count(&text);
        if words <= cfg.token_budget {
            return Ok(Prompt {
                text,
                candidates: ids[..n].iter().map(|s| s.to_string()).collect(),
            });
        }
        if n == floor {
            return Err(Error::BudgetExceeded {
                budget: cfg.token_budget,
                candidates: n,
                words,
            });
        }
        n -= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::Term;
    use crate::retriever::ScoredTerm;
    use std::collections::HashMap;

    fn ranked(ids: &[&str], k: usize) -> RankedList {
        RankedList {
            entity_id: "e".into(),
            items: ids
                .iter()
                .enumerate()
                .map(|(i, id)| ScoredTerm {
                    term_id: id.to_string(),
                    score: 10.0 - i as f64,
                })
                .collect(),
            k,
        }
    }

    fn names(ids: &[&str]) -> HashMap<String, String> {
        ids.iter().map(|id| (id.to_string(), id.to_uppercase())).collect()
    }

    fn diamond() -> Hierarchy {
        Hierarchy::new(
            vec![
                Term::new("a", "disease"),
                Term::new("b", "typhus"),
                Term::new("c", "louse-borne disease"),
                Term::new("d", "epidemic typhus"),
            ],
            vec![
                ("a".into(), "b".into()),
                ("a".into(), "c".into()),
                ("b".into(), "d".into()),
                ("c".into(), "d".into()),
            ],
        )
        .unwrap()
    }

    #[test]
    fn demonstration_moves_gold_first() {
        let ids = ["p", "q", "g", "r", "s"];
        let d = build_demonstration("query", "g", &ranked(&ids, 5), &names(&ids)).unwrap();
        assert_eq!(d.choices, ["P", "Q", "G", "R", "S"]);
        assert_eq!(d.answer, ["G", "P", "Q", "R", "S"]);
        assert!(!d.pseudo);
    }

    #[test]
    fn demonstration_inserts_missing_gold_in_last_slot() {
        let ids = ["p", "q", "r", "s", "t"];
        let mut n = names(&ids);
        n.insert("g".into(), "G".into());
        let d = build_demonstration("query", "g", &ranked(&ids, 5), &n).unwrap();
        assert_eq!(d.choices, ["P", "Q", "R", "S", "G"]);
        assert_eq!(d.answer, ["G", "P", "Q", "R", "S"]);

        // short list: appended rather than replacing
        let d = build_demonstration("query", "g", &ranked(&["p", "q"], 5), &n).unwrap();
        assert_eq!(d.choices, ["P", "Q", "G"]);
    }

    #[test]
    fn demonstration_needs_candidates() {
        assert!(build_demonstration("q", "g", &ranked(&[], 5), &names(&[])).is_err());
    }

    #[test]
    fn pseudo_demonstration_is_fixed() {
        let d = build_pseudo_demonstration();
        assert!(d.pseudo);
        assert_eq!(
            d.render(),
            "Query: golden retriever\nChoices: dog; cat; bird\nAnswer: dog; cat; bird"
        );
    }

    #[test]
    fn context_strings() {
        let h = diamond();
        assert_eq!(build_context_string(&ranked(&["a"], 5), &h), "Contexts: {}");
        assert_eq!(
            build_context_string(&ranked(&["d"], 5), &h),
            "Contexts: {epidemic typhus isA typhus; epidemic typhus isA louse-borne disease}"
        );
        assert_eq!(
            build_context_string(&ranked(&["b", "a"], 5), &h),
            "Contexts: {typhus isA disease}"
        );
    }

    #[test]
    fn zero_shot_layout() {
        let h = diamond();
        let cfg = PromptConfig {
            hierarchy_context: false,
            ..PromptConfig::default()
        };
        let p = assemble_prompt(&cfg, &[], "typhus fever", &ranked(&["d", "b"], 5), &h).unwrap();
        let expected = format!(
            "{DEFAULT_TASK_DESCRIPTION}\n\nQuery: golden retriever\nChoices: dog; cat; bird\nAnswer: dog; cat; bird\n\nQuery: typhus fever\nChoices: epidemic typhus; typhus\nAnswer:"
        );
        assert_eq!(p.text, expected);
        assert_eq!(p.candidates, ["d", "b"]);
    }

    #[test]
    fn one_shot_with_context() {
        let h = diamond();
        let cfg = PromptConfig {
            shots: 1,
            ..PromptConfig::default()
        };
        let demo = build_demonstration("tifus", "b", &ranked(&["d", "b"], 5), &h).unwrap();
        let p = assemble_prompt(&cfg, &[demo], "typhus fever", &ranked(&["d", "b"], 5), &h).unwrap();
        assert!(!p.text.contains("golden retriever"));
        assert_eq!(p.text.matches("Query:").count(), 2);
        assert!(p
            .text
            .contains("Query: tifus\nChoices: epidemic typhus; typhus\nAnswer: typhus; epidemic typhus"));
        assert!(p.text.contains(
            "\nContexts: {epidemic typhus isA typhus; epidemic typhus isA louse-borne disease; typhus isA disease}\nAnswer:"
        ));
        assert!(p.text.ends_with("Answer:"));
    }

    #[test]
    fn demo_count_must_match_shots() {
        let h = diamond();
        let rl = ranked(&["d"], 5);
        let one = PromptConfig {
            shots: 1,
            ..PromptConfig::default()
        };
        assert!(assemble_prompt(&one, &[], "x", &rl, &h).is_err());
        assert!(assemble_prompt(&one, &[build_pseudo_demonstration()], "x", &rl, &h).is_err());
        let demo = build_demonstration("y", "d", &rl, &h).unwrap();
        assert!(assemble_prompt(&PromptConfig::default(), &[demo], "x", &rl, &h).is_err());
        assert!(assemble_prompt(&PromptConfig::default(), &[], "x", &ranked(&[], 5), &h).is_err());
    }

    #[test]
    fn truncates_tail_under_small_budget() {
        let terms: Vec<Term> = (0..50)
            .map(|i| {
                Term::new(
                    format!("t{i:02}"),
                    format!("candidate number {i} with a long descriptive name"),
                )
            })
            .collect();
        let pairs = (1..50).map(|i| ("t00".to_string(), format!("t{i:02}"))).collect();
        let h = Hierarchy::new(terms, pairs).unwrap();
        let ids: Vec<String> = (0..50).map(|i| format!("t{i:02}")).collect();
        let id_refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let cfg = PromptConfig {
            token_budget: 300,
            ..PromptConfig::default()
        };
        let p = assemble_prompt(&cfg, &[], "query", &ranked(&id_refs, 50), &h).unwrap();
        let n = p.candidates.len();
        assert!((3..50).contains(&n), "{n}");
        assert_eq!(p.candidates, ids[..n]);
        assert!(word_count(&p.text) <= 300);
        // one more candidate would not have fitted
        let longer = render_prompt(&cfg, &[build_pseudo_demonstration()], "query", &id_refs[..n + 1], &h);
        assert!(word_count(&longer) > 300);
        // contexts only mention kept candidates
        let contexts = p.text.lines().find(|l| l.starts_with("Contexts:")).unwrap();
        assert_eq!(contexts.matches(" isA ").count(), n - 1);
        assert!(!contexts.contains(&format!("candidate number {n} with")));
    }

    #[test]
    fn unmeetable_budget() {
        let long = "word ".repeat(400);
        let h = diamond();
        let cfg = PromptConfig {
            task_description: long,
            token_budget: 300,
            ..PromptConfig::default()
        };
        let err = assemble_prompt(&cfg, &[], "x", &ranked(&["a", "b", "c", "d"], 5), &h).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { candidates: 3, .. }), "{err}");
        let small = PromptConfig {
            token_budget: 100,
            ..PromptConfig::default()
        };
        assert!(matches!(small.validate(), Err(Error::Invalid(_))));
    }
}
