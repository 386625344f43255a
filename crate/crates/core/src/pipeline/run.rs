use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use super::artifacts::{read_predictions, write_predictions};
use super::config::{BackendKind, RunConfig};
use crate::error::{Error, Result};
use crate::eval::{edit_distance_rank, evaluate, GainConfig, MetricReport, RankedPrediction};
use crate::fsutil::{safe_file_stem, write_atomic};
use crate::kb::{
    load_hierarchy, load_link_pairs, AlignmentSet, Dataset, DepthConvention, Entity, Hierarchy, KnowledgeGraph, Link,
};
use crate::llm::{Backend, CompletionRequest, Counting, EchoMock, OracleMock, ResponseCache, ReverseMock, Throttled};
use crate::prompting::{assemble_prompt, build_demonstration, parse_response, Demonstration};
use crate::retriever::{build_entity_query, Bm25Index, Bm25Params, ExpansionConfig, RankedList};

/// BM25 retrieval with an edit-distance fallback for entities whose query
/// matches no term at all.
pub struct CandidateSource<'a> {
    kg: &'a KnowledgeGraph,
    hierarchy: &'a Hierarchy,
    index: Bm25Index,
    expansion: ExpansionConfig,
    k: usize,
}

impl<'a> CandidateSource<'a> {
    pub fn new(
        kg: &'a KnowledgeGraph,
        hierarchy: &'a Hierarchy,
        expansion: ExpansionConfig,
        params: Bm25Params,
        k: usize,
    ) -> Result<Self> {
        Ok(CandidateSource {
            kg,
            hierarchy,
            index: Bm25Index::build(hierarchy, expansion, params)?,
            expansion,
            k,
        })
    }

    pub fn index(&self) -> &Bm25Index {
        &self.index
    }

    pub fn query(&self, entity: &Entity) -> Vec<String> {
        build_entity_query(entity, self.kg, self.expansion)
    }

    /// Pure BM25 top-K; may be empty.
    pub fn retrieve(&self, entity: &Entity) -> RankedList {
        self.index.retrieve(&entity.id, &self.query(entity), self.k)
    }

    /// BM25 top-K, or the edit-distance top-K when BM25 finds nothing.
    pub fn candidates(&self, entity: &Entity) -> RankedList {
        let rl = self.retrieve(entity);
        if rl.is_empty() {
            log::debug!("no BM25 candidates for {}, using edit distance", entity.id);
            edit_distance_rank(entity, self.hierarchy, self.k)
        } else {
            rl
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub report: MetricReport,
    pub predictions: Vec<RankedPrediction>,
    /// Calls that reached the backend, i.e. cache misses.
    pub backend_calls: usize,
    pub cache_hits: usize,
}

fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut dataset = Dataset::load(&cfg.dataset)?;
    dataset.hierarchy = dataset.hierarchy.with_depth_convention(cfg.depth);
    Ok(dataset)
}

fn entity<'d>(kg: &'d KnowledgeGraph, link: &Link) -> Result<&'d Entity> {
    kg.entity(&link.entity)
        .ok_or_else(|| Error::UnknownEntity(link.entity.clone()))
}

fn mock_or_live(cfg: &RunConfig, dataset: &Dataset, alignment: &AlignmentSet) -> Result<Box<dyn Backend>> {
    Ok(match cfg.backend {
        BackendKind::Echo => Box::new(EchoMock),
        BackendKind::Reverse => Box::new(ReverseMock),
        BackendKind::Oracle => Box::new(OracleMock::from_links(&dataset.kg, &dataset.hierarchy, alignment)),
        BackendKind::Live => live_backend(cfg)?,
    })
}

#[cfg(feature = "live")]
fn live_backend(cfg: &RunConfig) -> Result<Box<dyn Backend>> {
    use crate::llm::{LiveBackend, LiveConfig};
    let endpoint = cfg
        .endpoint
        .clone()
        .ok_or_else(|| Error::Invalid("the live backend needs an endpoint".into()))?;
    let mut live = LiveConfig::from_env(endpoint);
    live.timeout = std::time::Duration::from_secs(cfg.timeout_secs);
    live.retry.max_attempts = cfg.max_attempts;
    Ok(Box::new(LiveBackend::new(live)))
}

#[cfg(not(feature = "live"))]
fn live_backend(_cfg: &RunConfig) -> Result<Box<dyn Backend>> {
    Err(Error::Invalid("built without the `live` feature".into()))
}

/// Runs the configured pipeline end to end and writes the run directory.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    let dataset = load_dataset(cfg)?;
    let alignment = dataset.alignment(cfg.shots)?;
    let backend = mock_or_live(cfg, &dataset, &alignment)?;
    let rate = (cfg.backend == BackendKind::Live).then_some(cfg.requests_per_second);
    let throttled = Throttled::new(backend, cfg.concurrency, rate);
    execute(cfg, &dataset, &alignment, &throttled)
}

/// Same as [`run`] with a caller-supplied backend in place of the
/// configured one.
pub fn run_with_backend(cfg: &RunConfig, backend: &dyn Backend) -> Result<RunOutcome> {
    let dataset = load_dataset(cfg)?;
    let alignment = dataset.alignment(cfg.shots)?;
    let throttled = Throttled::new(backend, cfg.concurrency, None);
    execute(cfg, &dataset, &alignment, &throttled)
}

struct QueryContext<'a> {
    cfg: &'a RunConfig,
    dataset: &'a Dataset,
    source: &'a CandidateSource<'a>,
    demos: &'a [Demonstration],
    cache: &'a ResponseCache,
    backend: &'a dyn Backend,
    model: String,
}

impl QueryContext<'_> {
    fn answer(&self, link: &Link) -> Result<RankedPrediction> {
        let h = &self.dataset.hierarchy;
        let entity = entity(&self.dataset.kg, link)?;
        let candidates = self.source.candidates(entity);
        let prompt = assemble_prompt(&self.cfg.prompt_config(), self.demos, &entity.name, &candidates, h)?;
        let stem = safe_file_stem(&entity.id);
        let run_dir = &self.cfg.run_dir;
        write_atomic(
            &run_dir.join("prompts").join(format!("{stem}.txt")),
            prompt.text.as_bytes(),
        )?;

        let req = CompletionRequest {
            prompt: prompt.text,
            max_output_tokens: self.cfg.max_output_tokens,
            temperature: self.cfg.temperature,
            model: self.model.clone(),
        };
        let completion = self.cache.complete(self.backend, &req)?;
        write_atomic(
            &run_dir.join("completions").join(format!("{stem}.txt")),
            completion.as_bytes(),
        )?;

        // the prompt may have dropped tail candidates to fit the budget
        let mut shown = candidates;
        shown.items.truncate(prompt.candidates.len());
        let parsed = parse_response(&completion, &shown, h);
        if !parsed.unmatched_outputs.is_empty() {
            log::debug!("{}: dropped unmatched items {:?}", entity.id, parsed.unmatched_outputs);
        }
        Ok(RankedPrediction::new(&entity.id, &link.term, parsed.ordered))
    }
}

fn write_report(cfg: &RunConfig, preds: &[RankedPrediction], report: &MetricReport) -> Result<()> {
    write_predictions(&cfg.run_dir.join("predictions.tsv"), preds)?;
    write_atomic(&cfg.run_dir.join("report.txt"), report.to_text().as_bytes())?;
    write_atomic(&cfg.run_dir.join("report.kv"), report.to_kv().as_bytes())
}

fn execute(cfg: &RunConfig, dataset: &Dataset, alignment: &AlignmentSet, backend: &dyn Backend) -> Result<RunOutcome> {
    let h = &dataset.hierarchy;
    let source = CandidateSource::new(&dataset.kg, h, cfg.expansion, cfg.bm25, cfg.top_k)?;
    let demos = alignment
        .demonstrations()
        .map(|link| {
            let e = entity(&dataset.kg, link)?;
            build_demonstration(&e.name, &link.term, &source.candidates(e), h)
        })
        .collect::<Result<Vec<_>>>()?;

    write_atomic(&cfg.run_dir.join("run.kv"), cfg.to_kv().as_bytes())?;
    let _ = std::fs::remove_file(cfg.run_dir.join("errors.log"));
    let cache = ResponseCache::new(cfg.cache_dir())?;
    let counting = Counting::new(backend);
    let ctx = QueryContext {
        cfg,
        dataset,
        source: &source,
        demos: &demos,
        cache: &cache,
        backend: &counting,
        model: cfg.effective_model(),
    };

    let tests: Vec<&Link> = alignment.tests().collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Invalid(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<RankedPrediction>> =
        pool.install(|| tests.par_iter().map(|link| ctx.answer(link)).collect());

    let mut preds = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (link, result) in tests.iter().zip(results) {
        match result {
            Ok(p) => preds.push(p),
            Err(e) => failures.push((link.entity.clone(), e)),
        }
    }
    if !failures.is_empty() {
        let mut log = String::new();
        for (id, e) in &failures {
            writeln!(log, "{id}\t{e}").unwrap();
        }
        write_atomic(&cfg.run_dir.join("errors.log"), log.as_bytes())?;
        log::error!("{} of {} queries failed; see errors.log", failures.len(), tests.len());
        return Err(failures.swap_remove(0).1);
    }

    let report = evaluate(&preds, h, &cfg.gain)?;
    write_report(cfg, &preds, &report)?;
    Ok(RunOutcome {
        report,
        predictions: preds,
        backend_calls: counting.calls(),
        cache_hits: cache.hits(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    EditDist,
    Bm25,
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "editdist" | "edit-dist" | "edit_distance" => Ok(Baseline::EditDist),
            "bm25" => Ok(Baseline::Bm25),
            other => Err(Error::Invalid(format!(
                "baseline must be editdist or bm25, got {other:?}"
            ))),
        }
    }
}

/// Baseline rankings for every test entity of `dataset` under `cfg`'s split.
pub fn baseline_predictions(cfg: &RunConfig, dataset: &Dataset, which: Baseline) -> Result<Vec<RankedPrediction>> {
    let alignment = dataset.alignment(cfg.shots)?;
    let h = &dataset.hierarchy;
    let source = match which {
        Baseline::Bm25 => Some(CandidateSource::new(
            &dataset.kg,
            h,
            cfg.expansion,
            cfg.bm25,
            cfg.top_k,
        )?),
        Baseline::EditDist => None,
    };
    let tests: Vec<&Link> = alignment.tests().collect();
    tests
        .par_iter()
        .map(|link| {
            let e = entity(&dataset.kg, link)?;
            let rl = match &source {
                Some(s) => s.candidates(e),
                None => edit_distance_rank(e, h, cfg.top_k),
            };
            Ok(RankedPrediction::new(
                &e.id,
                &link.term,
                rl.term_ids().map(String::from).collect(),
            ))
        })
        .collect()
}

/// Ranks every test entity with a baseline, evaluates, and writes
/// predictions and reports into the run directory.
pub fn baseline(cfg: &RunConfig, which: Baseline) -> Result<MetricReport> {
    let dataset = load_dataset(cfg)?;
    let preds = baseline_predictions(cfg, &dataset, which)?;
    let report = evaluate(&preds, &dataset.hierarchy, &cfg.gain)?;
    write_report(cfg, &preds, &report)?;
    Ok(report)
}

/// Evaluates a prediction file against gold links and a hierarchy.
pub fn evaluate_files(
    predictions: &std::path::Path,
    links: &std::path::Path,
    terms: &std::path::Path,
    pairs: &std::path::Path,
    depth: DepthConvention,
    gain: &GainConfig,
) -> Result<MetricReport> {
    let h = load_hierarchy(terms, pairs)?.with_depth_convention(depth);
    let gold = AlignmentSet::new(load_link_pairs(links)?, 0)?;
    let gold: std::collections::HashMap<&str, &str> = gold
        .links()
        .iter()
        .map(|l| (l.entity.as_str(), l.term.as_str()))
        .collect();
    let preds = read_predictions(predictions)?
        .into_iter()
        .map(|(entity, predicted)| {
            let g = gold
                .get(entity.as_str())
                .ok_or_else(|| Error::Invalid(format!("no gold link for predicted entity {entity:?}")))?;
            Ok(RankedPrediction::new(entity.clone(), *g, predicted))
        })
        .collect::<Result<Vec<_>>>()?;
    evaluate(&preds, &h, gain)
}
