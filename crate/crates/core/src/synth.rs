//! Seeded synthetic datasets for desk-scale experiments.
//!
//! The hierarchy is a random tree over generated disease-like names plus a
//! few extra parent edges; every extra edge points from a lower to a higher
//! term index, so the result is acyclic by construction. Each entity is
//! derived from a distinct term by a case change, a synonym swap, a typo or
//! a dropped modifier, and is linked back to that term.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kb::{Dataset, DatasetPaths, Entity, Hierarchy, KnowledgeGraph, RelationTriple, Term};

const MODIFIERS: &[&str] = &[
    "acute",
    "chronic",
    "viral",
    "bacterial",
    "fungal",
    "hereditary",
    "juvenile",
    "primary",
    "secondary",
    "malignant",
    "benign",
    "cardiac",
    "renal",
    "hepatic",
    "pulmonary",
    "cerebral",
    "dermal",
    "ocular",
    "gastric",
    "neural",
    "skeletal",
    "muscular",
    "vascular",
    "endocrine",
    "immune",
    "metabolic",
    "congenital",
    "infectious",
    "inflammatory",
    "degenerative",
    "familial",
    "idiopathic",
    "systemic",
    "focal",
    "diffuse",
    "recurrent",
    "progressive",
    "atypical",
    "neonatal",
    "adult",
    "tropical",
    "epidemic",
    "allergic",
    "autoimmune",
    "toxic",
];

const HEADS: &[&str] = &[
    "syndrome",
    "disease",
    "disorder",
    "fever",
    "infection",
    "carcinoma",
    "sarcoma",
    "lymphoma",
    "anemia",
    "arthritis",
    "dystrophy",
    "neuropathy",
    "myopathy",
    "fibrosis",
    "sclerosis",
    "stenosis",
    "deficiency",
    "insufficiency",
    "hyperplasia",
    "dysplasia",
    "lesion",
    "ulcer",
    "cyst",
    "tumor",
    "palsy",
    "atrophy",
    "edema",
    "necrosis",
    "toxicity",
    "typhus",
    "nephritis",
    "hepatitis",
    "colitis",
    "dermatitis",
    "encephalitis",
];

const FEATURES: &[&str] = &[
    "inflammation",
    "pain",
    "swelling",
    "lesions",
    "scarring",
    "weakness",
    "fatigue",
    "bleeding",
    "obstruction",
    "enlargement",
    "calcification",
    "infiltration",
    "degeneration",
    "ischemia",
];

const RELATIONS: &[&str] = &["associated_with", "co_occurs_with", "treated_by", "causes"];

/// Share of root-level terms.
const ROOT_FRACTION: usize = 40;
/// Probability that a term receives a second parent.
const EXTRA_PARENT_P: f64 = 0.08;

fn words(name: &str) -> Vec<&str> {
    name.split(' ').collect()
}

fn unique_name(
    rng: &mut ChaCha8Rng,
    taken: &mut HashSet<String>,
    mut propose: impl FnMut(&mut ChaCha8Rng) -> String,
) -> String {
    for _ in 0..32 {
        let name = propose(rng);
        if taken.insert(name.clone()) {
            return name;
        }
    }
    let base = propose(rng);
    let name = (2..)
        .map(|n| format!("{base} type {n}"))
        .find(|n| !taken.contains(n))
        .unwrap();
    taken.insert(name.clone());
    name
}

/// `renal fibrosis` -> `fibrosis, renal`
fn inverted(name: &str) -> String {
    let w = words(name);
    match w.split_last() {
        Some((head, rest)) if !rest.is_empty() => format!("{head}, {}", rest.join(" ")),
        _ => name.to_string(),
    }
}

fn with_typo(rng: &mut ChaCha8Rng, name: &str) -> String {
    let mut w: Vec<String> = words(name).into_iter().map(String::from).collect();
    let long: Vec<usize> = (0..w.len()).filter(|&i| w[i].chars().count() >= 5).collect();
    let Some(&i) = long.choose(rng) else {
        return name.to_string();
    };
    let mut chars: Vec<char> = w[i].chars().collect();
    let at = rng.random_range(1..chars.len() - 1);
    chars.swap(at, at + 1);
    w[i] = chars.into_iter().collect();
    w.join(" ")
}

fn title_case(name: &str) -> String {
    words(name)
        .into_iter()
        .map(|w| {
            let mut c = w.chars();
            c.next()
                .map_or_else(String::new, |f| f.to_uppercase().chain(c).collect())
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// In-memory synthetic dataset. Requires `n_terms >= n_entities >= 1`.
pub fn generate(seed: u64, n_terms: usize, n_entities: usize) -> Result<Dataset> {
    if n_entities == 0 || n_terms < n_entities {
        return Err(Error::Invalid(format!(
            "need n_terms >= n_entities >= 1, got {n_terms} terms and {n_entities} entities"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_roots = (n_terms / ROOT_FRACTION).max(1);

    let mut taken = HashSet::new();
    let mut names: Vec<String> = Vec::with_capacity(n_terms);
    let mut parents: Vec<Vec<usize>> = Vec::with_capacity(n_terms);
    for i in 0..n_terms {
        let mut ps = Vec::new();
        let name = if i < n_roots {
            unique_name(&mut rng, &mut taken, |r| {
                format!("{} {}", MODIFIERS.choose(r).unwrap(), HEADS.choose(r).unwrap())
            })
        } else {
            let p = rng.random_range(0..i);
            ps.push(p);
            let parent_words = words(&names[p]);
            let tail_words = &parent_words[parent_words.len().saturating_sub(2)..];
            let fresh: Vec<&str> = MODIFIERS.iter().copied().filter(|m| !tail_words.contains(m)).collect();
            let tail = tail_words.join(" ");
            unique_name(&mut rng, &mut taken, |r| format!("{} {tail}", fresh.choose(r).unwrap()))
        };
        if i > n_roots && rng.random_bool(EXTRA_PARENT_P) {
            let q = rng.random_range(0..i);
            if !ps.contains(&q) {
                ps.push(q);
            }
        }
        names.push(name);
        parents.push(ps);
    }

    let term_id = |i: usize| format!("T{i:06}");
    let mut terms = Vec::with_capacity(n_terms);
    for (i, name) in names.iter().enumerate() {
        let mut t = Term::new(term_id(i), name.clone());
        if words(name).len() > 1 && rng.random_bool(0.6) {
            t.synonyms.push(inverted(name));
        }
        let features: Vec<&str> = FEATURES.choose_multiple(&mut rng, 2).copied().collect();
        let kind = parents[i].first().map_or("condition", |&p| names[p].as_str());
        t.definition = Some(format!(
            "A {kind} characterized by {} and {}.",
            features[0], features[1]
        ));
        terms.push(t);
    }
    let pairs = parents
        .iter()
        .enumerate()
        .flat_map(|(c, ps)| ps.iter().map(move |&p| (term_id(p), term_id(c))))
        .collect();
    let hierarchy = Hierarchy::new(terms, pairs)?;

    let mut chosen: Vec<usize> = (0..n_terms).collect();
    chosen.shuffle(&mut rng);
    chosen.truncate(n_entities);

    let mut entity_names = HashSet::new();
    let mut entities = Vec::with_capacity(n_entities);
    let mut links = Vec::with_capacity(n_entities);
    for (k, &ti) in chosen.iter().enumerate() {
        let term = &hierarchy.terms()[ti];
        let roll: f64 = rng.random();
        let proposal = if roll < 0.35 {
            title_case(&term.name)
        } else if roll < 0.6 {
            term.synonyms.first().cloned().unwrap_or_else(|| term.name.clone())
        } else if roll < 0.85 {
            with_typo(&mut rng, &term.name)
        } else {
            let w = words(&term.name);
            if w.len() >= 3 {
                w[1..].join(" ")
            } else {
                term.name.clone()
            }
        };
        let name = [proposal, term.name.clone(), format!("{} ({})", term.name, term.id)]
            .into_iter()
            .find(|n| entity_names.insert(crate::text::fold(n)))
            .expect("term ids are unique");
        let id = format!("E{k:05}");
        let mut e = Entity::new(id.clone(), name);
        e.types = vec!["disease".into()];
        if rng.random_bool(0.5) {
            e.definition = term.definition.clone();
        }
        if rng.random_bool(0.3) && !term.synonyms.is_empty() {
            e.synonyms = term.synonyms.clone();
        }
        entities.push(e);
        links.push((id, term.id.clone()));
    }

    let mut triples = Vec::new();
    let mut seen = HashSet::new();
    for i in 0..n_entities {
        if n_entities < 2 {
            break;
        }
        for _ in 0..rng.random_range(0..4) {
            let j = rng.random_range(0..n_entities);
            let relation = *RELATIONS.choose(&mut rng).unwrap();
            if i != j && seen.insert((i, j, relation)) {
                triples.push(RelationTriple {
                    head: entities[i].id.clone(),
                    relation: relation.to_string(),
                    tail: entities[j].id.clone(),
                });
            }
        }
    }

    let kg = KnowledgeGraph::new(entities, triples)?;
    Ok(Dataset { kg, hierarchy, links })
}

/// Generates a dataset and writes it under `out_dir` with the conventional
/// file names.
pub fn make_synthetic(seed: u64, n_terms: usize, n_entities: usize, out_dir: impl AsRef<Path>) -> Result<DatasetPaths> {
    let paths = DatasetPaths::in_dir(out_dir);
    generate(seed, n_terms, n_entities)?.write(&paths)?;
    Ok(paths)
}
