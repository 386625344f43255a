use std::fmt::Write as _;

use serde::Serialize;

use super::metrics::{prediction_gains, query_ndcg};
use super::{hits_at_k, mrr, ndcg_at_k, wup, wup_top1, GainConfig, RankedPrediction};
use crate::error::Result;
use crate::kb::Hierarchy;

pub const HITS_KS: [usize; 5] = [1, 3, 5, 10, 20];
pub const NDCG_KS: [usize; 2] = [1, 3];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryRow {
    pub entity_id: String,
    pub gold: String,
    pub gold_rank: Option<usize>,
    pub top1: String,
    pub wup: f64,
    pub ndcg3: f64,
}

/// Aggregate metrics in percent plus a per-query breakdown.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub queries: usize,
    pub hits: Vec<(usize, f64)>,
    pub mrr: f64,
    pub ndcg: Vec<(usize, f64)>,
    pub wup: f64,
    pub rows: Vec<QueryRow>,
}

impl MetricReport {
    pub fn hits_at(&self, k: usize) -> Option<f64> {
        self.hits.iter().find(|(kk, _)| *kk == k).map(|(_, v)| *v)
    }

    pub fn ndcg_at(&self, k: usize) -> Option<f64> {
        self.ndcg.iter().find(|(kk, _)| *kk == k).map(|(_, v)| *v)
    }

    /// `key=value` lines, one metric per line.
    pub fn to_kv(&self) -> String {
        let mut out = format!("queries={}\n", self.queries);
        for (k, v) in &self.hits {
            writeln!(out, "hits@{k}={v:.4}").unwrap();
        }
        writeln!(out, "mrr={:.4}", self.mrr).unwrap();
        for (k, v) in &self.ndcg {
            writeln!(out, "ndcg@{k}={v:.4}").unwrap();
        }
        writeln!(out, "wup={:.4}", self.wup).unwrap();
        out
    }

    /// Aligned summary table followed by the per-query breakdown.
    pub fn to_text(&self) -> String {
        let mut headers = Vec::new();
        let mut values = Vec::new();
        for (k, v) in &self.hits {
            headers.push(format!("Hits@{k}"));
            values.push(format!("{v:.2}"));
        }
        headers.push("MRR".into());
        values.push(format!("{:.2}", self.mrr));
        for (k, v) in &self.ndcg {
            headers.push(format!("nDCG@{k}"));
            values.push(format!("{v:.2}"));
        }
        headers.push("WuP".into());
        values.push(format!("{:.2}", self.wup));

        let widths: Vec<usize> = headers.iter().zip(&values).map(|(h, v)| h.len().max(v.len())).collect();
        let line = |cells: &[String]| -> String {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        let mut out = format!("queries: {}\n\n", self.queries);
        out.push_str(&line(&headers));
        out.push('\n');
        out.push_str(&line(&values));
        out.push_str("\n\n");

        let ew = self.rows.iter().map(|r| r.entity_id.len()).max().unwrap_or(0).max(6);
        let gw = self.rows.iter().map(|r| r.gold.len()).max().unwrap_or(0).max(4);
        let tw = self.rows.iter().map(|r| r.top1.len()).max().unwrap_or(0).max(4);
        writeln!(
            out,
            "{:<ew$}  {:<gw$}  {:>4}  {:<tw$}  {:>6}  {:>6}",
            "entity", "gold", "rank", "top1", "wup", "ndcg@3"
        )
        .unwrap();
        for r in &self.rows {
            let rank = r.gold_rank.map_or_else(|| "-".to_string(), |n| n.to_string());
            writeln!(
                out,
                "{:<ew$}  {:<gw$}  {:>4}  {:<tw$}  {:>6.4}  {:>6.4}",
                r.entity_id, r.gold, rank, r.top1, r.wup, r.ndcg3
            )
            .unwrap();
        }
        out
    }
}

/// Full metric suite over `preds`.
pub fn evaluate(preds: &[RankedPrediction], h: &Hierarchy, gain: &GainConfig) -> Result<MetricReport> {
    for p in preds {
        p.validate()?;
    }
    let hits = HITS_KS
        .iter()
        .map(|&k| Ok((k, hits_at_k(preds, k)?)))
        .collect::<Result<Vec<_>>>()?;
    let ndcg = NDCG_KS
        .iter()
        .map(|&k| Ok((k, ndcg_at_k(preds, h, k, gain)?)))
        .collect::<Result<Vec<_>>>()?;
    let rows = preds
        .iter()
        .map(|p| {
            let top1 = p.predicted[0].clone();
            Ok(QueryRow {
                entity_id: p.entity_id.clone(),
                gold: p.gold.clone(),
                gold_rank: p.gold_rank(),
                wup: wup(h, &top1, &p.gold)?,
                ndcg3: query_ndcg(&prediction_gains(h, p, gain)?, 3),
                top1,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricReport {
        queries: preds.len(),
        hits,
        mrr: mrr(preds)?,
        ndcg,
        wup: wup_top1(preds, h)?,
        rows,
    })
}
