use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::RankedPrediction;
use crate::fsutil::write_atomic;
use crate::retriever::RankedList;

/// `entity_id<TAB>rank<TAB>term_id` rows, ranks starting at 1.
pub fn write_predictions(path: &Path, preds: &[RankedPrediction]) -> Result<()> {
    let mut out = String::new();
    for p in preds {
        for (i, term) in p.predicted.iter().enumerate() {
            writeln!(out, "{}\t{}\t{term}", p.entity_id, i + 1).unwrap();
        }
    }
    write_atomic(path, out.as_bytes())
}

/// `entity_id<TAB>rank<TAB>term_id<TAB>score` rows.
pub fn write_ranked_lists(out: &mut impl std::io::Write, lists: &[RankedList]) -> std::io::Result<()> {
    for rl in lists {
        for (i, item) in rl.items.iter().enumerate() {
            writeln!(out, "{}\t{}\t{}\t{:.6}", rl.entity_id, i + 1, item.term_id, item.score)?;
        }
    }
    Ok(())
}

/// Reads a prediction file back into per-entity ranked term lists, ordered
/// by rank. Extra columns (such as a score) are ignored.
pub fn read_predictions(path: &Path) -> Result<BTreeMap<String, Vec<String>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: BTreeMap<String, Vec<(usize, String)>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 3 {
            return Err(bad(format!(
                "expected entity_id, rank, term_id; found {} columns",
                cols.len()
            )));
        }
        let rank: usize = cols[1]
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad rank {:?}", cols[1])))?;
        rows.entry(cols[0].trim().to_string())
            .or_default()
            .push((rank, cols[2].trim().to_string()));
    }
    Ok(rows
        .into_iter()
        .map(|(entity, mut ranked)| {
            ranked.sort_by_key(|(r, _)| *r);
            (entity, ranked.into_iter().map(|(_, t)| t).collect())
        })
        .collect())
}
