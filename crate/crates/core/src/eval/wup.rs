use super::{mean_percent, require_nonempty, RankedPrediction};
use crate::error::{Error, Result};
use crate::kb::Hierarchy;

/// Wu-Palmer relatedness `2 * depth(c) / (depth(a) + depth(b))`, maximized
/// over common ancestors `c` (each term counts as its own ancestor, and the
/// virtual root at depth 0 is always shared).
///
/// Under shortest-path depths a DAG shortcut can give an ancestor a larger
/// depth than its descendant, so the ratio is capped at 1.
pub fn wup(h: &Hierarchy, a: &str, b: &str) -> Result<f64> {
    let ia = h.index_of(a)?;
    let ib = h.index_of(b)?;
    if ia == ib {
        return Ok(1.0);
    }
    let mut up_a = h.ancestor_indices(ia);
    up_a.insert(ia);
    let mut up_b = h.ancestor_indices(ib);
    up_b.insert(ib);
    let deepest = up_a.intersection(&up_b).map(|&c| h.depth_at(c)).max().unwrap_or(0);
    let denom = h.depth_at(ia) + h.depth_at(ib);
    Ok((2.0 * f64::from(deepest) / f64::from(denom)).min(1.0))
}

/// Mean Wu-Palmer score between each top-1 prediction and its gold term.
pub fn wup_top1(preds: &[RankedPrediction], h: &Hierarchy) -> Result<f64> {
    require_nonempty(preds)?;
    let scores = preds
        .iter()
        .map(|p| {
            let top = p
                .predicted
                .first()
                .ok_or_else(|| Error::Invalid(format!("empty prediction for {:?}", p.entity_id)))?;
            wup(h, top, &p.gold)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean_percent(scores.into_iter(), preds.len()))
}
