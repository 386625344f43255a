use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::eval::GainConfig;
use crate::kb::{DatasetPaths, DepthConvention};
use crate::llm::DEFAULT_MAX_OUTPUT_TOKENS;
use crate::prompting::{PromptConfig, DEFAULT_TASK_DESCRIPTION, DEFAULT_TOKEN_BUDGET};
use crate::retriever::{Bm25Params, ExpansionConfig};

pub const DEFAULT_TOP_K: usize = 10;
pub const MIN_TOP_K: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Echo,
    Oracle,
    Reverse,
    Live,
}

impl BackendKind {
    pub fn is_mock(self) -> bool {
        self != BackendKind::Live
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Echo => "echo",
            BackendKind::Oracle => "oracle",
            BackendKind::Reverse => "reverse",
            BackendKind::Live => "live",
        })
    }
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "echo" | "echo-mock" => Ok(BackendKind::Echo),
            "oracle" | "oracle-mock" => Ok(BackendKind::Oracle),
            "reverse" | "reverse-mock" => Ok(BackendKind::Reverse),
            "live" => Ok(BackendKind::Live),
            other => Err(Error::Invalid(format!(
                "backend must be echo, oracle, reverse or live; got {other:?}"
            ))),
        }
    }
}

/// Everything an end-to-end run needs. Settable from a flat `key = value`
/// file; see [`RunConfig::set`] for the keys.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: DatasetPaths,
    pub expansion: ExpansionConfig,
    pub bm25: Bm25Params,
    pub top_k: usize,
    pub shots: usize,
    pub hierarchy_context: bool,
    pub task_description: String,
    pub token_budget: usize,
    pub backend: BackendKind,
    pub run_dir: PathBuf,
    pub cache_dir: Option<PathBuf>,
    pub seed: u64,
    pub model: String,
    pub temperature: f64,
    pub max_output_tokens: usize,
    pub endpoint: Option<String>,
    pub concurrency: usize,
    pub requests_per_second: f64,
    pub timeout_secs: u64,
    /// Attempts per live request, including the first.
    pub max_attempts: usize,
    pub workers: usize,
    pub depth: DepthConvention,
    pub gain: GainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: DatasetPaths::in_dir("data"),
            expansion: ExpansionConfig::FULL,
            bm25: Bm25Params::default(),
            top_k: DEFAULT_TOP_K,
            shots: 0,
            hierarchy_context: true,
            task_description: DEFAULT_TASK_DESCRIPTION.to_string(),
            token_budget: DEFAULT_TOKEN_BUDGET,
            backend: BackendKind::Echo,
            run_dir: PathBuf::from("run"),
            cache_dir: None,
            seed: 0,
            model: "gpt-3.5-turbo-instruct".into(),
            temperature: 0.0,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            endpoint: None,
            concurrency: 4,
            requests_per_second: 1.0,
            timeout_secs: 60,
            max_attempts: 5,
            workers: 4,
            depth: DepthConvention::ShortestPath,
            gain: GainConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Invalid(format!("bad value for {key}: {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(Error::Invalid(format!("bad value for {key}: {value:?}"))),
    }
}

impl RunConfig {
    /// Applies one setting. Keys: `data_dir` (sets all five dataset paths),
    /// `entities`, `triples`, `terms`, `pairs`, `links`, `expansion`, `k1`,
    /// `b`, `topk`, `shots`, `hierarchy_context`, `task_description`,
    /// `token_budget`, `backend`, `run_dir`, `cache_dir`, `seed`, `model`,
    /// `temperature`, `max_output_tokens`, `endpoint`, `concurrency`,
    /// `requests_per_second`, `timeout_secs`, `max_attempts`, `workers`, `depth`,
    /// `gain_base`, `gain_cutoff`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "data_dir" => self.dataset = DatasetPaths::in_dir(value),
            "entities" => self.dataset.entities = value.into(),
            "triples" => self.dataset.triples = value.into(),
            "terms" => self.dataset.terms = value.into(),
            "pairs" => self.dataset.pairs = value.into(),
            "links" => self.dataset.links = value.into(),
            "expansion" => self.expansion = value.parse()?,
            "k1" => self.bm25.k1 = parse(key, value)?,
            "b" => self.bm25.b = parse(key, value)?,
            "topk" => self.top_k = parse(key, value)?,
            "shots" => self.shots = parse(key, value)?,
            "hierarchy_context" => self.hierarchy_context = parse_bool(key, value)?,
            "task_description" => self.task_description = value.to_string(),
            "token_budget" => self.token_budget = parse(key, value)?,
            "backend" => self.backend = value.parse()?,
            "run_dir" => self.run_dir = value.into(),
            "cache_dir" => self.cache_dir = Some(value.into()),
            "seed" => self.seed = parse(key, value)?,
            "model" => self.model = value.to_string(),
            "temperature" => self.temperature = parse(key, value)?,
            "max_output_tokens" => self.max_output_tokens = parse(key, value)?,
            "endpoint" => self.endpoint = Some(value.to_string()),
            "concurrency" => self.concurrency = parse(key, value)?,
            "requests_per_second" => self.requests_per_second = parse(key, value)?,
            "timeout_secs" => self.timeout_secs = parse(key, value)?,
            "max_attempts" => self.max_attempts = parse(key, value)?,
            "workers" => self.workers = parse(key, value)?,
            "depth" => self.depth = value.parse()?,
            "gain_base" => self.gain.base = parse(key, value)?,
            "gain_cutoff" => self.gain.cutoff = parse(key, value)?,
            other => return Err(Error::Invalid(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`; `#` starts a comment line.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Invalid(format!("config line {}: expected key=value, got {line:?}", n + 1)))?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = RunConfig::default();
        cfg.apply_kv(&text)?;
        Ok(cfg)
    }

    pub fn prompt_config(&self) -> PromptConfig {
        PromptConfig {
            shots: self.shots,
            hierarchy_context: self.hierarchy_context,
            task_description: self.task_description.clone(),
            token_budget: self.token_budget,
        }
    }

    /// Model name used in requests and cache keys. Mocks use their own
    /// name so switching mocks never reuses another mock's completions.
    pub fn effective_model(&self) -> String {
        match self.backend {
            BackendKind::Live => self.model.clone(),
            mock => format!("{mock}-mock"),
        }
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cache_dir.clone().unwrap_or_else(|| self.run_dir.join("cache"))
    }

    /// Checks values and that every dataset file exists.
    pub fn validate(&self) -> Result<()> {
        self.validate_values()?;
        for p in [
            &self.dataset.entities,
            &self.dataset.triples,
            &self.dataset.terms,
            &self.dataset.pairs,
            &self.dataset.links,
        ] {
            if !p.is_file() {
                return Err(Error::Invalid(format!("dataset file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn validate_values(&self) -> Result<()> {
        Bm25Params::new(self.bm25.k1, self.bm25.b)?;
        if self.top_k < MIN_TOP_K {
            return Err(Error::Invalid(format!(
                "topk must be at least {MIN_TOP_K}, got {}",
                self.top_k
            )));
        }
        if self.shots > 1 {
            return Err(Error::Invalid(format!("shots must be 0 or 1, got {}", self.shots)));
        }
        self.prompt_config().validate()?;
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(Error::Invalid(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.workers == 0 || self.concurrency == 0 || self.max_attempts == 0 {
            return Err(Error::Invalid(
                "workers, concurrency and max_attempts must be positive".into(),
            ));
        }
        if self.requests_per_second.is_nan() || self.requests_per_second <= 0.0 {
            return Err(Error::Invalid("requests_per_second must be positive".into()));
        }
        if self.gain.cutoff > 64 || self.gain.base.is_nan() || self.gain.base <= 1.0 {
            return Err(Error::Invalid(
                "gain_base must exceed 1 and gain_cutoff stay within 64".into(),
            ));
        }
        if self.backend == BackendKind::Live && self.endpoint.is_none() {
            return Err(Error::Invalid("the live backend needs an endpoint".into()));
        }
        Ok(())
    }

    /// Settings as `key=value` lines, accepted back by [`RunConfig::apply_kv`].
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| writeln!(out, "{k}={v}").unwrap();
        put("entities", self.dataset.entities.display().to_string());
        put("triples", self.dataset.triples.display().to_string());
        put("terms", self.dataset.terms.display().to_string());
        put("pairs", self.dataset.pairs.display().to_string());
        put("links", self.dataset.links.display().to_string());
        put("expansion", self.expansion.to_string());
        put("k1", self.bm25.k1.to_string());
        put("b", self.bm25.b.to_string());
        put("topk", self.top_k.to_string());
        put("shots", self.shots.to_string());
        put("hierarchy_context", self.hierarchy_context.to_string());
        put("task_description", self.task_description.clone());
        put("token_budget", self.token_budget.to_string());
        put("backend", self.backend.to_string());
        put("run_dir", self.run_dir.display().to_string());
        put("cache_dir", self.cache_dir().display().to_string());
        put("seed", self.seed.to_string());
        put("model", self.model.clone());
        put("temperature", self.temperature.to_string());
        put("max_output_tokens", self.max_output_tokens.to_string());
        if let Some(e) = &self.endpoint {
            put("endpoint", e.clone());
        }
        put("concurrency", self.concurrency.to_string());
        put("requests_per_second", self.requests_per_second.to_string());
        put("timeout_secs", self.timeout_secs.to_string());
        put("max_attempts", self.max_attempts.to_string());
        put("workers", self.workers.to_string());
        put(
            "depth",
            match self.depth {
                DepthConvention::ShortestPath => "shortest".into(),
                DepthConvention::LongestPath => "longest".into(),
            },
        );
        put("gain_base", self.gain.base.to_string());
        put("gain_cutoff", self.gain.cutoff.to_string());
        out
    }
}
