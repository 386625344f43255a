use std::collections::BTreeSet;

use proptest::prelude::*;

use taxalign::eval::{edit_distance, evaluate, hits_at_k, mrr, ndcg_at_k, wup, GainConfig, RankedPrediction};
use taxalign::kb::{load_hierarchy, write_pairs, write_terms, DepthConvention, Hierarchy, Term, ROOT_ID};
use taxalign::llm::{cached_complete, complete, CompletionRequest, EchoMock};
use taxalign::prompting::{assemble_prompt, parse_response, PromptConfig};
use taxalign::retriever::{Bm25Index, Bm25Params, RankedList, ScoredTerm};
use taxalign::Error;

/// Node count plus forward edges `(parent, child)` with `parent < child`
/// before relabelling by `perm`.
fn dag() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (1usize..12).prop_flat_map(|n| {
        let slots: Vec<(usize, usize)> = (0..n).flat_map(|c| (0..c).map(move |p| (p, c))).collect();
        let m = slots.len();
        (
            Just(n),
            Just(slots),
            proptest::collection::vec(proptest::bool::weighted(0.3), m),
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
        )
            .prop_map(|(n, slots, keep, perm)| {
                let edges = slots
                    .into_iter()
                    .zip(keep)
                    .filter(|(_, k)| *k)
                    .map(|((p, c), _)| (perm[p], perm[c]))
                    .collect();
                (n, edges)
            })
    })
}

fn id(i: usize) -> String {
    format!("t{i:02}")
}

fn build(n: usize, edges: &[(usize, usize)]) -> Result<Hierarchy, Error> {
    Hierarchy::new(
        (0..n).map(|i| Term::new(id(i), format!("term {i}"))).collect(),
        edges.iter().map(|&(p, c)| (id(p), id(c))).collect(),
    )
}

fn tree() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (1usize..12).prop_flat_map(|n| {
        proptest::collection::vec(any::<prop::sample::Index>(), n).prop_map(move |picks| {
            // node c > 0 either hangs under an earlier node or starts a new root
            let edges = (1..n)
                .filter(|c| picks[*c].index(4) != 0)
                .map(|c| (picks[c].index(c), c))
                .collect();
            (n, edges)
        })
    })
}

fn preds_on(n: usize) -> impl Strategy<Value = Vec<RankedPrediction>> {
    proptest::collection::vec((0..n, Just((0..n).collect::<Vec<_>>()).prop_shuffle(), 1..=n), 1..6).prop_map(|qs| {
        qs.into_iter()
            .enumerate()
            .map(|(q, (gold, order, len))| {
                RankedPrediction::new(format!("e{q}"), id(gold), order[..len].iter().map(|&i| id(i)).collect())
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ancestors_follow_parents((n, edges) in dag()) {
        let h = build(n, &edges).unwrap();
        for i in 0..n {
            let t = id(i);
            let anc = h.ancestors(&t).unwrap();
            prop_assert!(!anc.contains(&t));
            let mut expected: BTreeSet<String> = BTreeSet::from([ROOT_ID.to_string()]);
            for p in h.parents(&t).unwrap() {
                expected.insert(p.to_string());
                expected.extend(h.ancestors(p).unwrap());
            }
            prop_assert_eq!(anc, expected);
        }
    }

    #[test]
    fn depth_is_one_plus_min_parent((n, edges) in dag()) {
        let h = build(n, &edges).unwrap();
        for i in 0..n {
            let parents = h.parents(&id(i)).unwrap();
            let expected = parents.iter().map(|p| h.depth(p).unwrap()).min().map_or(1, |d| d + 1);
            prop_assert_eq!(h.depth(&id(i)).unwrap(), expected);
            prop_assert!(h.depth(&id(i)).unwrap() as usize <= n);
        }
    }

    #[test]
    fn back_edge_is_rejected((n, edges) in dag(), pick in any::<prop::sample::Index>()) {
        prop_assert!(build(n, &edges).is_ok());
        let h = build(n, &edges).unwrap();
        // any proper ancestor -> descendant pair reversed closes a cycle
        let chains: Vec<(String, String)> = (0..n)
            .flat_map(|i| {
                h.ancestors(&id(i)).unwrap().into_iter().filter(|a| a != ROOT_ID).map(move |a| (a, id(i)))
            })
            .collect();
        prop_assume!(!chains.is_empty());
        let (anc, desc) = &chains[pick.index(chains.len())];
        let mut pairs: Vec<(String, String)> = edges.iter().map(|&(p, c)| (id(p), id(c))).collect();
        pairs.push((desc.clone(), anc.clone()));
        let terms = (0..n).map(|i| Term::new(id(i), format!("term {i}"))).collect();
        match Hierarchy::new(terms, pairs) {
            Err(Error::Cycle(cycle)) => {
                prop_assert!(cycle.len() >= 2);
                prop_assert_eq!(cycle.first(), cycle.last());
            }
            other => prop_assert!(false, "expected a cycle error, got {:?}", other.map(|h| h.len())),
        }
    }

    #[test]
    fn hierarchy_round_trip((n, edges) in dag()) {
        let h = build(n, &edges).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (t, p) = (dir.path().join("terms.jsonl"), dir.path().join("pairs.tsv"));
        write_terms(&t, &h).unwrap();
        write_pairs(&p, &h).unwrap();
        let back = load_hierarchy(&t, &p).unwrap();
        prop_assert_eq!(back.terms(), h.terms());
        prop_assert_eq!(back.pairs(), h.pairs());
        for i in 0..n {
            prop_assert_eq!(back.depth(&id(i)).unwrap(), h.depth(&id(i)).unwrap());
        }
    }

    #[test]
    fn wup_is_symmetric_and_bounded((n, edges) in dag(), longest in any::<bool>()) {
        let convention = if longest { DepthConvention::LongestPath } else { DepthConvention::ShortestPath };
        let h = build(n, &edges).unwrap().with_depth_convention(convention);
        for a in 0..n {
            for b in 0..n {
                let ab = wup(&h, &id(a), &id(b)).unwrap();
                prop_assert_eq!(ab, wup(&h, &id(b), &id(a)).unwrap());
                prop_assert!((0.0..=1.0).contains(&ab));
                // with longest-path depth every ancestor is strictly shallower
                if longest {
                    prop_assert_eq!(ab == 1.0, a == b);
                }
            }
        }
    }

    #[test]
    fn wup_is_one_only_on_identity_in_trees((n, edges) in tree()) {
        let h = build(n, &edges).unwrap();
        for a in 0..n {
            for b in 0..n {
                prop_assert_eq!(wup(&h, &id(a), &id(b)).unwrap() == 1.0, a == b);
            }
        }
    }

    #[test]
    fn ranking_metric_bounds(preds in preds_on(8)) {
        let h = build(8, &[(0, 1), (1, 2), (0, 3), (3, 4), (5, 6)]).unwrap();
        let mut last = 0.0;
        for k in 1..=8 {
            let hk = hits_at_k(&preds, k).unwrap();
            prop_assert!(hk >= last);
            last = hk;
        }
        let m = mrr(&preds).unwrap();
        prop_assert!(m >= hits_at_k(&preds, 1).unwrap() - 1e-9);
        prop_assert!(m <= hits_at_k(&preds, 8).unwrap() + 1e-9);
        for k in [1, 3, 5] {
            let v = ndcg_at_k(&preds, &h, k, &GainConfig::default()).unwrap();
            prop_assert!((0.0..=100.0 + 1e-9).contains(&v));
        }
    }

    #[test]
    fn metrics_ignore_query_order(preds in preds_on(8), seed in any::<u64>()) {
        let h = build(8, &[(0, 1), (1, 2), (0, 3), (3, 4), (5, 6)]).unwrap();
        let mut shuffled = preds.clone();
        let len = shuffled.len();
        shuffled.rotate_left((seed as usize) % len);
        let a = evaluate(&preds, &h, &GainConfig::default()).unwrap();
        let b = evaluate(&shuffled, &h, &GainConfig::default()).unwrap();
        for (x, y) in a.hits.iter().zip(&b.hits) {
            prop_assert!((x.1 - y.1).abs() < 1e-9);
        }
        prop_assert!((a.mrr - b.mrr).abs() < 1e-9);
        prop_assert!((a.wup - b.wup).abs() < 1e-9);
        for (x, y) in a.ndcg.iter().zip(&b.ndcg) {
            prop_assert!((x.1 - y.1).abs() < 1e-9);
        }
    }

    #[test]
    fn sorting_by_gain_maximizes_ndcg((n, edges) in dag(), gold in any::<prop::sample::Index>(), picks in proptest::collection::vec(any::<prop::sample::Index>(), 1..=5)) {
        let h = build(n, &edges).unwrap();
        let gold = id(gold.index(n));
        let mut chosen: Vec<String> = Vec::new();
        for p in picks {
            let t = id(p.index(n));
            if !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        let cfg = GainConfig::default();
        let gain = |t: &str| taxalign::eval::relevance_gain(&h, t, &gold, &cfg).unwrap();
        let mut best = chosen.clone();
        best.sort_by(|a, b| gain(b).total_cmp(&gain(a)));
        let score = |order: &[String]| {
            ndcg_at_k(&[RankedPrediction::new("e", gold.clone(), order.to_vec())], &h, 3, &cfg).unwrap()
        };
        let top = score(&best);
        for perm in permutations(&chosen) {
            prop_assert!(score(&perm) <= top + 1e-9);
        }
    }

    #[test]
    fn edit_distance_triangle(a in "[abc]{0,6}", b in "[abc]{0,6}", c in "[abc]{0,6}") {
        prop_assert!(edit_distance(&a, &c) <= edit_distance(&a, &b) + edit_distance(&b, &c));
        prop_assert_eq!(edit_distance(&a, &b), edit_distance(&b, &a));
        prop_assert_eq!(edit_distance(&a, &b) == 0, a == b);
    }

    #[test]
    fn retrieve_is_prefix_closed_and_rescorable(
        docs in proptest::collection::vec(proptest::collection::vec(0u8..12, 1..10), 1..40),
        query in proptest::collection::vec(0u8..14, 0..6),
        k in 1usize..50,
        extra in 0usize..20,
    ) {
        let tok = |t: &u8| format!("w{t}");
        let docs: Vec<(String, Vec<String>)> = docs
            .iter()
            .enumerate()
            .map(|(i, d)| (format!("d{i:02}"), d.iter().map(tok).collect()))
            .collect();
        let query: Vec<String> = query.iter().map(tok).collect();
        let index = Bm25Index::from_documents(docs, Bm25Params::default()).unwrap();
        let short = index.retrieve("q", &query, k);
        let long = index.retrieve("q", &query, k + extra);
        prop_assert_eq!(&short.items[..], &long.items[..short.len()]);
        for item in &long.items {
            let again = index.score(&query, &item.term_id).unwrap();
            prop_assert!((again - item.score).abs() <= 1e-9 * item.score.abs().max(1.0));
            prop_assert!(item.score > 0.0);
        }
        prop_assert_eq!(index.retrieve("q", &query, k), short);
    }

    #[test]
    fn parse_round_trip_and_permutation(n in 1usize..10, order in Just((0..10).collect::<Vec<_>>()).prop_shuffle(), junk in ".{0,40}") {
        let h = build(10, &[]).unwrap();
        let ids: Vec<String> = order.iter().filter(|&&i| i < n).map(|&i| id(i)).collect();
        let candidates = ranked(&ids);
        let mut reversed = ids.clone();
        reversed.reverse();
        let names: Vec<&str> = reversed.iter().map(|t| h.name(t).unwrap()).collect();
        let parsed = parse_response(&format!("Answer: {}", names.join("; ")), &candidates, &h);
        prop_assert_eq!(&parsed.ordered, &reversed);
        prop_assert!(parsed.appended.is_empty());

        let fuzzed = parse_response(&junk, &candidates, &h);
        let mut got = fuzzed.ordered.clone();
        got.sort();
        let mut want = ids.clone();
        want.sort();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn prompts_are_deterministic(n in 3usize..10, shots_ctx in any::<bool>(), budget in 256usize..2000) {
        let h = build(10, &[(0, 1), (1, 2), (0, 3)]).unwrap();
        let ids: Vec<String> = (0..n).map(id).collect();
        let cfg = PromptConfig { hierarchy_context: shots_ctx, token_budget: budget, ..PromptConfig::default() };
        let a = assemble_prompt(&cfg, &[], "some query", &ranked(&ids), &h).unwrap();
        let b = assemble_prompt(&cfg, &[], "some query", &ranked(&ids), &h).unwrap();
        prop_assert!(a.text.ends_with("Answer:"));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn cache_is_transparent(prompts in proptest::collection::vec("[a-z ;\n]{0,30}", 1..8), temperature in 0.0f64..1.0) {
        let dir = tempfile::tempdir().unwrap();
        for p in &prompts {
            let mut req = CompletionRequest::new("echo-mock", format!("Choices: {p}\nAnswer:"));
            req.temperature = temperature;
            let direct = complete(&EchoMock, &req).unwrap();
            prop_assert_eq!(cached_complete(dir.path(), &EchoMock, &req).unwrap(), direct.clone());
            prop_assert_eq!(cached_complete(dir.path(), &EchoMock, &req).unwrap(), direct);
        }
    }
}

fn ranked(ids: &[String]) -> RankedList {
    RankedList {
        entity_id: "e".into(),
        items: ids
            .iter()
            .enumerate()
            .map(|(i, t)| ScoredTerm {
                term_id: t.clone(),
                score: (ids.len() - i) as f64,
            })
            .collect(),
        k: ids.len(),
    }
}

fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    (0..items.len())
        .flat_map(|i| {
            let mut rest = items.to_vec();
            let head = rest.remove(i);
            permutations(&rest).into_iter().map(move |mut tail| {
                tail.insert(0, head.clone());
                tail
            })
        })
        .collect()
}
