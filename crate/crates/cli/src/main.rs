use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use taxalign::eval::GainConfig;
use taxalign::kb::{Dataset, DatasetPaths, DepthConvention};
use taxalign::pipeline::{self, Baseline, CandidateSource, RunConfig};
use taxalign::{synth, Error};

/// Align knowledge-graph entities to hierarchy terms by BM25 retrieval and
/// LLM re-ranking.
#[derive(Parser, Debug)]
#[command(name = "taxalign", version)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load and validate a dataset, then print a summary.
    Ingest(ConfigArgs),
    /// Print BM25 candidates as entity_id, rank, term_id, score.
    Retrieve(RetrieveArgs),
    /// Run retrieval, prompting, completion and evaluation end to end.
    Run(ConfigArgs),
    /// Rank test entities with a baseline and evaluate.
    Baseline(BaselineArgs),
    /// Score a prediction file against gold links.
    Evaluate(EvaluateArgs),
    /// Write a seeded synthetic dataset.
    Synth(SynthArgs),
}

/// Settings are applied in order: defaults, `--config`, named flags, `--set`.
#[derive(Args, Debug)]
struct ConfigArgs {
    /// Flat key=value config file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Directory holding entities.jsonl, triples.tsv, terms.jsonl, pairs.tsv, links.tsv.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    run_dir: Option<PathBuf>,
    /// name, atr, str or atr+str.
    #[arg(long)]
    expansion: Option<String>,
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    topk: Option<usize>,
    #[arg(long)]
    shots: Option<usize>,
    /// echo, oracle, reverse or live.
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Leave the Contexts line out of prompts.
    #[arg(long)]
    no_context: bool,
    /// Any config key, e.g. --set token_budget=2000. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let path = |p: &PathBuf| p.display().to_string();
        let flags = [
            ("data_dir", self.data_dir.as_ref().map(path)),
            ("run_dir", self.run_dir.as_ref().map(path)),
            ("expansion", self.expansion.clone()),
            ("k1", self.k1.map(|v| v.to_string())),
            ("b", self.b.map(|v| v.to_string())),
            ("topk", self.topk.map(|v| v.to_string())),
            ("shots", self.shots.map(|v| v.to_string())),
            ("backend", self.backend.clone()),
            ("endpoint", self.endpoint.clone()),
            ("model", self.model.clone()),
            ("hierarchy_context", self.no_context.then(|| "false".to_string())),
        ];
        for (key, value) in flags {
            if let Some(value) = value {
                cfg.set(key, &value)?;
            }
        }
        for kv in &self.overrides {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| Error::Invalid(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct RetrieveArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Only these entities (repeatable); default all.
    #[arg(long = "entity", value_name = "ID")]
    entities: Vec<String>,
    /// Write to a file instead of stdout.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BaselineArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// editdist or bm25.
    #[arg(long)]
    method: String,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// entity_id, rank, term_id rows.
    #[arg(long)]
    predictions: PathBuf,
    /// Dataset directory supplying links, terms and pairs not given below.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    links: Option<PathBuf>,
    #[arg(long)]
    terms: Option<PathBuf>,
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// shortest or longest.
    #[arg(long, default_value = "shortest")]
    depth: String,
    #[arg(long, default_value_t = 2.0)]
    gain_base: f64,
    #[arg(long, default_value_t = 5)]
    gain_cutoff: usize,
    /// Also write report.txt and report.kv into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    terms: usize,
    #[arg(long, default_value_t = 200)]
    entities: usize,
    #[arg(short, long)]
    out: PathBuf,
}

fn ingest(args: &ConfigArgs) -> Result<(), Error> {
    let cfg = args.resolve()?;
    let dataset = Dataset::load(&cfg.dataset)?;
    let h = &dataset.hierarchy;
    let roots = h
        .terms()
        .iter()
        .filter(|t| h.parents(&t.id).is_ok_and(|p| p.is_empty()))
        .count();
    println!("entities={}", dataset.kg.len());
    println!("triples={}", dataset.kg.triples().len());
    println!("terms={}", h.len());
    println!("pairs={}", h.pairs().len());
    println!("top_level_terms={roots}");
    println!("max_depth={}", h.max_depth());
    println!("links={}", dataset.links.len());
    Ok(())
}

fn retrieve(args: &RetrieveArgs) -> Result<(), Error> {
    let cfg = args.config.resolve()?;
    cfg.validate_values()?;
    let dataset = Dataset::load(&cfg.dataset)?;
    let source = CandidateSource::new(&dataset.kg, &dataset.hierarchy, cfg.expansion, cfg.bm25, cfg.top_k)?;
    let entities = if args.entities.is_empty() {
        dataset.kg.entities().collect()
    } else {
        args.entities
            .iter()
            .map(|id| dataset.kg.entity(id).ok_or_else(|| Error::UnknownEntity(id.clone())))
            .collect::<Result<Vec<_>, _>>()?
    };
    let lists: Vec<_> = entities.into_iter().map(|e| source.retrieve(e)).collect();
    let write = |out: &mut dyn Write| pipeline::write_ranked_lists(&mut io::BufWriter::new(out), &lists);
    match &args.out {
        Some(path) => {
            let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
            write(&mut file).map_err(|e| Error::io(path, e))
        }
        None => write(&mut io::stdout().lock()).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn run(args: &ConfigArgs) -> Result<(), Error> {
    let cfg = args.resolve()?;
    let outcome = pipeline::run(&cfg)?;
    print!("{}", outcome.report.to_text());
    eprintln!(
        "backend calls: {}, cache hits: {}, run directory: {}",
        outcome.backend_calls,
        outcome.cache_hits,
        cfg.run_dir.display()
    );
    Ok(())
}

fn baseline(args: &BaselineArgs) -> Result<(), Error> {
    let which: Baseline = args.method.parse()?;
    let cfg = args.config.resolve()?;
    let report = pipeline::baseline(&cfg, which)?;
    print!("{}", report.to_text());
    Ok(())
}

fn evaluate(args: &EvaluateArgs) -> Result<(), Error> {
    let dir = args.data_dir.as_ref().map(DatasetPaths::in_dir);
    let pick = |explicit: &Option<PathBuf>, from_dir: fn(&DatasetPaths) -> &PathBuf, name: &str| {
        explicit
            .clone()
            .or_else(|| dir.as_ref().map(|d| from_dir(d).clone()))
            .ok_or_else(|| Error::Invalid(format!("give --{name} or --data-dir")))
    };
    let links = pick(&args.links, |d| &d.links, "links")?;
    let terms = pick(&args.terms, |d| &d.terms, "terms")?;
    let pairs = pick(&args.pairs, |d| &d.pairs, "pairs")?;
    let depth: DepthConvention = args.depth.parse()?;
    let gain = GainConfig {
        base: args.gain_base,
        cutoff: args.gain_cutoff,
    };
    let report = pipeline::evaluate_files(&args.predictions, &links, &terms, &pairs, depth, &gain)?;
    let text = report.to_text();
    print!("{text}");
    if let Some(out) = &args.out {
        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        for (name, body) in [("report.txt", text), ("report.kv", report.to_kv())] {
            let path = out.join(name);
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<(), Error> {
    let paths = synth::make_synthetic(args.seed, args.terms, args.entities, &args.out)?;
    eprintln!(
        "wrote {} terms and {} entities to {}",
        args.terms,
        args.entities,
        paths.entities.parent().unwrap_or(&args.out).display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match &cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Retrieve(a) => retrieve(a),
        Command::Run(a) => run(a),
        Command::Baseline(a) => baseline(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
