//! Subcommands.

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use crmeta::alignment::{resegment_text, MwerOptions};
use crmeta::analysis::session_scores;
use crmeta::config::ScorerConfig;
use crmeta::jsonl::{read_records, write_records};
use crmeta::pipeline::{self, AnalysisOutput, CorpusSummary};
use crmeta::ratings::aggregate_ratings;
use crmeta::report::write_json;
use crmeta::session::ServeConfig;
use crmeta::{Config, CrDefinition, Metric, MetricVariant, ScoreRecord, SessionService, SubsetSelection};

#[derive(Debug, Parser)]
#[command(name = "crmeta", version, about = "Meta-evaluation of speech translation metrics against continuous human ratings")]
pub struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and validate the corpus, write a summary.
    Ingest(Common),
    /// Score every candidate under the configured metric variants.
    Score(Common),
    /// Resegment a hypothesis onto reference segments (one per line).
    Align(AlignArgs),
    /// Compute per-session and per-candidate ratings.
    Rate(Common),
    /// Correlate ratings with scores.
    Analyze(AnalyzeArgs),
    /// Render tables and figures from an analysis file.
    Report(ReportArgs),
    /// Ingest, score, rate, analyze and report in one go.
    Run(Common),
    /// Host the rating session endpoints.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Subsets to analyse: both, Common, NonNative (repeatable).
    #[arg(long)]
    pub subset: Vec<SubsetSelection>,
    /// Comma-separated variant labels such as COMET/transl/Sent, or
    /// `headline` / `all`.
    #[arg(long)]
    pub variants: Option<String>,
    #[arg(long)]
    pub cr_definition: Option<CrDefinition>,
    /// Significance thresholds for cluster boundaries (repeatable).
    #[arg(long)]
    pub threshold: Vec<f64>,
    /// External segment scorer, e.g. `COMET=python3 comet_bridge.py` (repeatable).
    #[arg(long, value_name = "NAME=COMMAND")]
    pub scorer: Vec<String>,
    /// Segment score cache file.
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Scores to analyse; defaults to <out-dir>/scores.jsonl.
    #[arg(long)]
    pub scores: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Analysis file written by `analyze`.
    #[arg(long)]
    pub analysis: PathBuf,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    /// Hypothesis segments, one per line.
    #[arg(long)]
    pub hyp: PathBuf,
    /// Reference segments, one per line.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub lowercase: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub state_dir: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
    /// Comma-separated evaluator ids; overrides the config.
    #[arg(long)]
    pub evaluators: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn parse_variants(spec: &str) -> Result<Vec<MetricVariant>> {
    match spec.trim() {
        "all" => Ok(MetricVariant::ranking_universe()),
        "headline" => Ok(MetricVariant::headline()),
        s => s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| p.parse().map_err(anyhow::Error::from))
            .collect(),
    }
}

pub fn parse_scorer(spec: &str) -> Result<(Metric, ScorerConfig)> {
    let Some((name, command)) = spec.split_once('=') else {
        bail!("--scorer expects NAME=COMMAND, got `{spec}`");
    };
    let metric: Metric = name.trim().parse()?;
    if command.trim().is_empty() {
        bail!("--scorer {name}: empty command");
    }
    Ok((
        metric,
        ScorerConfig {
            command: command.to_string(),
        },
    ))
}

impl Common {
    pub fn load(&self) -> Result<Config> {
        let mut cfg = Config::load(&self.config)?;
        if !self.subset.is_empty() {
            cfg.analysis.subsets = self.subset.clone();
        }
        if let Some(v) = &self.variants {
            cfg.analysis.variants = parse_variants(v)?;
        }
        if let Some(d) = self.cr_definition {
            cfg.analysis.cr_definition = d;
        }
        if !self.threshold.is_empty() {
            cfg.analysis.thresholds = self.threshold.clone();
        }
        for s in &self.scorer {
            let (m, sc) = parse_scorer(s)?;
            cfg.scoring.scorers.insert(m, sc);
        }
        if let Some(c) = &self.cache {
            cfg.scoring.cache = Some(c.clone());
        }
        cfg.analysis.validate()?;
        Ok(cfg)
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let f = std::fs::File::open(path).with_context(|| format!("{}", path.display()))?;
    BufReader::new(f)
        .lines()
        .collect::<std::io::Result<_>>()
        .with_context(|| format!("{}", path.display()))
}

fn load_scores(path: &Path) -> Result<Vec<ScoreRecord>> {
    Ok(read_records::<ScoreRecord>(path)?.into_iter().map(|(_, r)| r).collect())
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(c) => {
            let cfg = c.load()?;
            let corpus = pipeline::ingest(&cfg).context("ingest")?;
            let summary = CorpusSummary::of(&corpus);
            write_json(&c.out_dir.join("corpus.json"), &summary)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Score(c) => {
            let cfg = c.load()?;
            let corpus = pipeline::ingest(&cfg).context("ingest")?;
            let scores = pipeline::score(&cfg, &corpus).context("score")?;
            let path = c.out_dir.join(pipeline::SCORES_FILE);
            write_records(&path, &scores)?;
            eprintln!("wrote {} scores to {}", scores.len(), path.display());
        }
        Command::Align(a) => {
            let hyp = read_lines(&a.hyp)?;
            let refs = read_lines(&a.reference)?;
            let opts = MwerOptions {
                lowercase: a.lowercase,
            };
            let (segments, cost) = resegment_text(&hyp, &refs, opts)?;
            for s in segments {
                println!("{s}");
            }
            eprintln!("edit distance: {cost}");
        }
        Command::Rate(c) => {
            let cfg = c.load()?;
            let corpus = pipeline::ingest(&cfg).context("ingest")?;
            let rated: Vec<_> = aggregate_ratings(&corpus.sessions).into_values().collect();
            write_records(&c.out_dir.join("ratings.jsonl"), &rated)?;
            write_records(&c.out_dir.join("sessions.jsonl"), &session_scores(&corpus))?;
            eprintln!("{} rated candidates from {} sessions", rated.len(), corpus.sessions.len());
        }
        Command::Analyze(a) => {
            let cfg = a.common.load()?;
            let corpus = pipeline::ingest(&cfg).context("ingest")?;
            let path = a
                .scores
                .unwrap_or_else(|| a.common.out_dir.join(pipeline::SCORES_FILE));
            let scores = load_scores(&path).context("analyze")?;
            let analysis = pipeline::analyze(&cfg, &corpus, &scores).context("analyze")?;
            write_json(&a.common.out_dir.join(pipeline::ANALYSIS_FILE), &analysis)?;
            summarize(&analysis);
        }
        Command::Report(r) => {
            let text = std::fs::read_to_string(&r.analysis)
                .with_context(|| format!("{}", r.analysis.display()))?;
            let analysis: AnalysisOutput = serde_json::from_str(&text)
                .with_context(|| format!("{}", r.analysis.display()))?;
            pipeline::report(&analysis, &r.out_dir).context("report")?;
        }
        Command::Run(c) => {
            let cfg = c.load()?;
            let analysis = pipeline::end_to_end(&cfg, &c.out_dir)?;
            summarize(&analysis);
        }
        Command::Serve(s) => {
            let cfg = Config::load(&s.config)?;
            let mut serve = cfg.serve.clone().unwrap_or(ServeConfig {
                evaluators: Vec::new(),
                per_candidate: 2,
                seed: None,
            });
            if let Some(e) = &s.evaluators {
                serve.evaluators = e.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect();
            }
            if s.seed.is_some() {
                serve.seed = s.seed;
            }
            let corpus = pipeline::ingest(&cfg).context("ingest")?;
            let svc = Arc::new(SessionService::open(corpus, &s.state_dir, &serve)?);
            eprintln!("assignment seed {}", svc.seed());
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(crate::server::serve(svc, &s.addr))?;
        }
    }
    Ok(())
}

fn summarize(a: &AnalysisOutput) {
    for t in &a.tables {
        if let (Some(top), Some(bottom)) = (t.ranking.first(), t.ranking.last()) {
            println!(
                "{}/{}: n={} top {} r={:.3}, bottom {} r={:.3}",
                t.subset, t.aggregation, t.n, top.metric_variant, top.r, bottom.metric_variant, bottom.r
            );
        }
    }
    if let Some(c) = &a.cr_cri {
        println!("CR vs CRi: r={:.3} (n={})", c.correlation.r, c.correlation.n);
    }
}
