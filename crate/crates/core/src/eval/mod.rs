//! Ranking metrics over per-entity predictions and the edit-distance
//! baseline.
//!
//! Hits@k and MRR only reward the exact gold term. nDCG@k and Wu-Palmer
//! also give credit to terms near the gold one in the hierarchy.

mod editdist;
mod metrics;
mod report;
mod wup;

pub use editdist::{edit_distance, edit_distance_rank};
pub use metrics::{hits_at_k, mrr, ndcg_at_k, relevance_gain, GainConfig};
pub use report::{evaluate, MetricReport, QueryRow, HITS_KS, NDCG_KS};
pub use wup::{wup, wup_top1};

use serde::Serialize;

use crate::error::{Error, Result};

/// Ranked term ids predicted for one entity, with its gold term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankedPrediction {
    pub entity_id: String,
    pub gold: String,
    pub predicted: Vec<String>,
}

impl RankedPrediction {
    pub fn new(entity_id: impl Into<String>, gold: impl Into<String>, predicted: Vec<String>) -> Self {
        RankedPrediction {
            entity_id: entity_id.into(),
            gold: gold.into(),
            predicted,
        }
    }

    /// 1-based rank of the gold term, if predicted.
    pub fn gold_rank(&self) -> Option<usize> {
        self.predicted.iter().position(|t| *t == self.gold).map(|p| p + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.predicted.is_empty() {
            return Err(Error::Invalid(format!("empty prediction for {:?}", self.entity_id)));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = self.predicted.iter().find(|t| !seen.insert(t.as_str())) {
            return Err(Error::Invalid(format!(
                "term {dup:?} predicted twice for {:?}",
                self.entity_id
            )));
        }
        Ok(())
    }
}

fn require_nonempty(preds: &[RankedPrediction]) -> Result<()> {
    if preds.is_empty() {
        return Err(Error::Invalid("no predictions to evaluate".into()));
    }
    Ok(())
}

fn mean_percent(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    100.0 * values.sum::<f64>() / n as f64
}
