use crate::kb::{Entity, Hierarchy};
use crate::retriever::{RankedList, ScoredTerm};
use crate::text::fold;

/// Levenshtein distance with unit costs, over Unicode scalar values.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let substitute = prev[j] + usize::from(ca != cb);
            cur[j + 1] = substitute.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Every term ranked by edit distance between case-folded names, ties by
/// term id, truncated to `k`. Scores are negated distances so they never
/// increase down the list.
pub fn edit_distance_rank(entity: &Entity, h: &Hierarchy, k: usize) -> RankedList {
    let query = fold(&entity.name);
    let mut scored: Vec<(usize, &str)> = h
        .terms()
        .iter()
        .map(|t| (edit_distance(&query, &fold(&t.name)), t.id.as_str()))
        .collect();
    // terms() is in id order, so a stable sort keeps id ties ordered
    scored.sort_by_key(|&(d, _)| d);
    scored.truncate(k);
    RankedList {
        entity_id: entity.id.clone(),
        items: scored
            .into_iter()
            .map(|(d, id)| ScoredTerm {
                term_id: id.to_string(),
                score: -(d as f64),
            })
            .collect(),
        k,
    }
}
