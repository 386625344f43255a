//! End-to-end runs: ingest, retrieve, prompt, complete, parse, evaluate.
//!
//! A run directory holds
//!
//! ```text
//! run.kv            settings used
//! prompts/<id>.txt  one prompt per test entity
//! completions/<id>.txt
//! predictions.tsv   entity_id, rank, term_id
//! report.txt        aligned metric table and per-query rows
//! report.kv         metrics as key=value
//! errors.log        only when some query failed
//! cache/            completion cache unless `cache_dir` is set
//! ```

mod artifacts;
mod config;
mod run;

pub use artifacts::{read_predictions, write_predictions, write_ranked_lists};
pub use config::{BackendKind, RunConfig, DEFAULT_TOP_K, MIN_TOP_K};
pub use run::{
    baseline, baseline_predictions, evaluate_files, run, run_with_backend, Baseline, CandidateSource, RunOutcome,
};
