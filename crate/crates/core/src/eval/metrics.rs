use std::collections::{HashMap, VecDeque};

use super::{mean_percent, require_nonempty, RankedPrediction};
use crate::error::{Error, Result};
use crate::kb::Hierarchy;

pub fn hits_at_k(preds: &[RankedPrediction], k: usize) -> Result<f64> {
    require_nonempty(preds)?;
    if k == 0 {
        return Err(Error::Invalid("k must be at least 1".into()));
    }
    let hits = preds.iter().map(|p| match p.gold_rank() {
        Some(r) if r <= k => 1.0,
        _ => 0.0,
    });
    Ok(mean_percent(hits, preds.len()))
}

/// Mean reciprocal rank of the gold term; a missing gold term scores 0.
pub fn mrr(preds: &[RankedPrediction]) -> Result<f64> {
    require_nonempty(preds)?;
    let rr = preds.iter().map(|p| p.gold_rank().map_or(0.0, |r| 1.0 / r as f64));
    Ok(mean_percent(rr, preds.len()))
}

/// Graded relevance `base^-d`, where `d` is the undirected hierarchy
/// distance between prediction and gold; zero beyond `cutoff` edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainConfig {
    pub base: f64,
    pub cutoff: usize,
}

impl Default for GainConfig {
    fn default() -> Self {
        GainConfig { base: 2.0, cutoff: 5 }
    }
}

impl GainConfig {
    fn gain(&self, distance: Option<usize>) -> f64 {
        match distance {
            Some(d) if d <= self.cutoff => self.base.powi(-(d as i32)),
            _ => 0.0,
        }
    }
}

/// Undirected BFS distances from term index `from`, up to `limit` edges.
/// Edges to the virtual root are not part of the graph.
fn distances_within(h: &Hierarchy, from: usize, limit: usize) -> HashMap<usize, usize> {
    let mut dist = HashMap::from([(from, 0)]);
    let mut queue = VecDeque::from([from]);
    while let Some(at) = queue.pop_front() {
        let d = dist[&at];
        if d == limit {
            continue;
        }
        for &next in h.parent_indices(at).iter().chain(h.child_indices(at)) {
            if let std::collections::hash_map::Entry::Vacant(slot) = dist.entry(next) {
                slot.insert(d + 1);
                queue.push_back(next);
            }
        }
    }
    dist
}

pub fn relevance_gain(h: &Hierarchy, predicted: &str, gold: &str, cfg: &GainConfig) -> Result<f64> {
    let p = h.index_of(predicted)?;
    let g = h.index_of(gold)?;
    let dist = distances_within(h, g, cfg.cutoff);
    Ok(cfg.gain(dist.get(&p).copied()))
}

fn discount(position: usize) -> f64 {
    ((position + 2) as f64).log2()
}

/// Gains of each predicted term with respect to the gold term.
pub(crate) fn prediction_gains(h: &Hierarchy, pred: &RankedPrediction, cfg: &GainConfig) -> Result<Vec<f64>> {
    let g = h.index_of(&pred.gold)?;
    let dist = distances_within(h, g, cfg.cutoff);
    pred.predicted
        .iter()
        .map(|t| Ok(cfg.gain(dist.get(&h.index_of(t)?).copied())))
        .collect()
}

/// nDCG@k of one query, normalized by the best ordering of its own
/// predicted terms. Zero when no predicted term has any gain.
pub(crate) fn query_ndcg(gains: &[f64], k: usize) -> f64 {
    let dcg: f64 = gains.iter().take(k).enumerate().map(|(i, g)| g / discount(i)).sum();
    let mut ideal = gains.to_vec();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcg: f64 = ideal.iter().take(k).enumerate().map(|(i, g)| g / discount(i)).sum();
    if idcg > 0.0 {
        dcg / idcg
    } else {
        0.0
    }
}

pub fn ndcg_at_k(preds: &[RankedPrediction], h: &Hierarchy, k: usize, cfg: &GainConfig) -> Result<f64> {
    require_nonempty(preds)?;
    if k == 0 {
        return Err(Error::Invalid("k must be at least 1".into()));
    }
    let per_query = preds
        .iter()
        .map(|p| Ok(query_ndcg(&prediction_gains(h, p, cfg)?, k)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean_percent(per_query.into_iter(), preds.len()))
}
