use std::collections::HashSet;

use serde::Serialize;

use super::CandidateNames;
use crate::retriever::RankedList;
use crate::text::{fold, tokenize};

/// Minimum token Jaccard similarity for a fuzzy match.
const MIN_JACCARD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParsedRanking {
    /// Every candidate id exactly once: matched ones in completion order,
    /// then the unmentioned ones in retriever order.
    pub ordered: Vec<String>,
    /// Completion items that matched no candidate.
    pub unmatched_outputs: Vec<String>,
    /// Candidates the completion never mentioned.
    pub appended: Vec<String>,
}

fn jaccard(a: &HashSet<String>, b: &HashSet<String>) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let shared = a.intersection(b).count();
    shared as f64 / (a.len() + b.len() - shared) as f64
}

fn answer_section(raw: &str) -> &str {
    match raw.rfind("Answer:") {
        Some(at) => &raw[at + "Answer:".len()..],
        None => raw,
    }
}

/// Maps a free-text completion onto a total ordering of the candidates.
///
/// Items are split on `;` and newlines and matched by case-folded name,
/// then case-folded synonym, then best token Jaccard (at least 0.5, ties to
/// the better retriever rank). Unmatched items and repeat matches are
/// dropped. Never fails: an unusable completion yields the retriever order.
pub fn parse_response(raw: &str, candidates: &RankedList, names: &impl CandidateNames) -> ParsedRanking {
    let ids: Vec<&str> = candidates.term_ids().collect();
    let folded_names: Vec<String> = ids.iter().map(|id| fold(names.display(id))).collect();
    let name_tokens: Vec<HashSet<String>> = ids
        .iter()
        .map(|id| tokenize(names.display(id)).into_iter().collect())
        .collect();

    let mut taken = vec![false; ids.len()];
    let mut ordered = Vec::with_capacity(ids.len());
    let mut unmatched_outputs = Vec::new();

    for item in answer_section(raw).split([';', '\n']) {
        let item = item.trim_matches(|c: char| c.is_whitespace() || c == '{' || c == '}');
        if item.is_empty() {
            continue;
        }
        let folded = fold(item);
        let hit = folded_names
            .iter()
            .position(|n| *n == folded)
            .or_else(|| {
                ids.iter()
                    .position(|id| names.synonyms(id).iter().any(|s| fold(s) == folded))
            })
            .or_else(|| {
                let tokens: HashSet<String> = tokenize(item).into_iter().collect();
                let mut best: Option<(usize, f64)> = None;
                for (i, cand) in name_tokens.iter().enumerate() {
                    let sim = jaccard(&tokens, cand);
                    if sim >= MIN_JACCARD && best.is_none_or(|(_, s)| sim > s) {
                        best = Some((i, sim));
                    }
                }
                best.map(|(i, _)| i)
            });
        match hit {
            Some(i) if !taken[i] => {
                taken[i] = true;
                ordered.push(ids[i].to_string());
            }
            Some(_) => {}
            None => unmatched_outputs.push(item.to_string()),
        }
    }

    let appended: Vec<String> = ids
        .iter()
        .zip(&taken)
        .filter(|(_, &t)| !t)
        .map(|(id, _)| id.to_string())
        .collect();
    ordered.extend(appended.iter().cloned());
    ParsedRanking {
        ordered,
        unmatched_outputs,
        appended,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{Hierarchy, Term};
    use crate::retriever::ScoredTerm;
    use std::collections::HashMap;

    fn ranked(ids: &[&str]) -> RankedList {
        RankedList {
            entity_id: "e".into(),
            items: ids
                .iter()
                .map(|id| ScoredTerm {
                    term_id: id.to_string(),
                    score: 1.0,
                })
                .collect(),
            k: ids.len(),
        }
    }

    fn abc() -> (RankedList, HashMap<String, String>) {
        let names = [("a", "A"), ("b", "B"), ("c", "C")]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        (ranked(&["a", "b", "c"]), names)
    }

    #[test]
    fn clean_answer() {
        let (rl, names) = abc();
        let p = parse_response("Answer: A; B; C", &rl, &names);
        assert_eq!(p.ordered, ["a", "b", "c"]);
        assert!(p.unmatched_outputs.is_empty());
        assert!(p.appended.is_empty());
    }

    #[test]
    fn unknown_item_dropped_and_missing_appended() {
        let (rl, names) = abc();
        let p = parse_response("B; D; A", &rl, &names);
        assert_eq!(p.ordered, ["b", "a", "c"]);
        assert_eq!(p.unmatched_outputs, ["D"]);
        assert_eq!(p.appended, ["c"]);
    }

    #[test]
    fn empty_completion_keeps_retriever_order() {
        let (rl, names) = abc();
        let p = parse_response("", &rl, &names);
        assert_eq!(p.ordered, ["a", "b", "c"]);
        assert_eq!(p.appended, ["a", "b", "c"]);
    }

    #[test]
    fn uses_text_after_last_answer_marker() {
        let (rl, names) = abc();
        let p = parse_response("Answer: A; B\n\nQuery: x\nAnswer: c\nb", &rl, &names);
        assert_eq!(p.ordered, ["c", "b", "a"]);
    }

    #[test]
    fn duplicates_are_dropped() {
        let (rl, names) = abc();
        let p = parse_response("C; c ; {C}; A", &rl, &names);
        assert_eq!(p.ordered, ["c", "a", "b"]);
        assert!(p.unmatched_outputs.is_empty());
    }

    #[test]
    fn synonym_and_fuzzy_matching() {
        let mut typhus = Term::new("t1", "Epidemic Typhus");
        typhus.synonyms = vec!["Louse-borne typhus".into()];
        let h = Hierarchy::new(
            vec![
                typhus,
                Term::new("t2", "Murine Typhus"),
                Term::new("t3", "Scrub Typhus Fever"),
            ],
            vec![],
        )
        .unwrap();
        let rl = ranked(&["t1", "t2", "t3"]);
        let p = parse_response("louse-borne TYPHUS", &rl, &h);
        assert_eq!(p.ordered[0], "t1");
        // {scrub, typhus} vs {scrub, typhus, fever}: 2/3
        let p = parse_response("scrub typhus", &rl, &h);
        assert_eq!(p.ordered[0], "t3");
        // {typhus} vs each two-token name: 1/2 everywhere, best rank wins
        let p = parse_response("typhus", &rl, &h);
        assert_eq!(p.ordered[0], "t1");
        // below threshold
        let p = parse_response("fever of unknown origin", &rl, &h);
        assert_eq!(p.unmatched_outputs, ["fever of unknown origin"]);
        assert_eq!(p.ordered, ["t1", "t2", "t3"]);
    }
}
