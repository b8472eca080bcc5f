//! Stages from input files to the report tree: ingest, score, rate, analyze,
//! report. Each stage also writes its own records so later stages can be
//! rerun from files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    build_pairs, cr_cri_agreement, recommendations, run_table1, run_table2, session_scores,
    Aggregation, Recommendation, SessionScores, SubsetSelection, Table1, Table2,
};
use crate::config::Config;
use crate::corpus::{load_corpus, Corpus, Subset};
use crate::error::{Error, Result};
use crate::jsonl::write_records;
use crate::metrics::{score_all, MetricVariant, ScoreRecord, ScoringContext};
use crate::ratings::{aggregate_ratings, RatingScore};
use crate::report::{
    emit_heatmap, emit_scatter, slug, table1_markdown, table2_markdown, write_file, write_json,
    HeatmapSpec, ScatterData, ScatterPoint,
};
use crate::stats::CorrelationResult;

pub const SCORES_FILE: &str = "scores.jsonl";
pub const ANALYSIS_FILE: &str = "analysis.json";

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage: name,
        inner: Box::new(e),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub documents: usize,
    pub common_documents: usize,
    pub candidates: usize,
    pub systems: Vec<String>,
    pub sessions: usize,
    pub rated_candidates: usize,
}

impl CorpusSummary {
    pub fn of(corpus: &Corpus) -> Self {
        CorpusSummary {
            documents: corpus.documents.len(),
            common_documents: corpus
                .documents
                .values()
                .filter(|d| d.subset == Subset::Common)
                .count(),
            candidates: corpus.candidates.len(),
            systems: corpus.systems().into_iter().map(String::from).collect(),
            sessions: corpus.sessions.len(),
            rated_candidates: aggregate_ratings(&corpus.sessions).len(),
        }
    }
}

pub fn ingest(config: &Config) -> Result<Corpus> {
    load_corpus(&config.corpus)
}

/// Requested variants plus the headline ones, minus neural metrics that have
/// no scorer configured.
pub fn scoring_variants(variants: &[MetricVariant], ctx: &ScoringContext) -> Vec<MetricVariant> {
    let mut all: Vec<MetricVariant> = variants
        .iter()
        .copied()
        .chain(MetricVariant::headline())
        .collect();
    all.sort();
    all.dedup();
    let (keep, skip): (Vec<_>, Vec<_>) = all
        .into_iter()
        .partition(|v| !v.metric.is_neural() || ctx.scorers.contains_key(&v.metric));
    if !skip.is_empty() {
        let names: Vec<String> = skip.iter().map(|v| v.label()).collect();
        log::warn!("no scorer configured, skipping {}", names.join(", "));
    }
    keep
}

pub fn score(config: &Config, corpus: &Corpus) -> Result<Vec<ScoreRecord>> {
    let ctx = config.scoring_context()?;
    let variants = scoring_variants(&config.analysis.variants, &ctx);
    score_all(&variants, corpus, &ctx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrCriFigure {
    pub correlation: CorrelationResult,
    pub scatter: ScatterData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterFigure {
    pub subset: SubsetSelection,
    pub aggregation: Aggregation,
    pub variant: MetricVariant,
    pub data: ScatterData,
}

/// Everything the report stage renders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOutput {
    pub table1: Option<Table1>,
    pub tables: Vec<Table2>,
    pub scatters: Vec<ScatterFigure>,
    pub cr_cri: Option<CrCriFigure>,
    pub recommendations: Vec<Recommendation>,
}

pub fn analyze(config: &Config, corpus: &Corpus, scores: &[ScoreRecord]) -> Result<AnalysisOutput> {
    let cfg = &config.analysis;
    cfg.validate()?;
    let scored: Vec<MetricVariant> = {
        let mut v: Vec<MetricVariant> = scores.iter().map(|s| s.variant).collect();
        v.sort();
        v.dedup();
        v
    };
    let mut cfg = cfg.clone();
    let before = cfg.variants.len();
    cfg.variants.retain(|v| scored.contains(v));
    if cfg.variants.len() < before {
        log::warn!("{} requested variants have no scores", before - cfg.variants.len());
    }

    let table1 = match run_table1(corpus, scores, &cfg) {
        Ok(t) => Some(t),
        Err(Error::Empty(msg)) => {
            log::warn!("table 1 skipped: {msg}");
            None
        }
        Err(e) => return Err(e),
    };

    let headline: Vec<MetricVariant> = MetricVariant::headline()
        .into_iter()
        .filter(|v| scored.contains(v))
        .collect();
    let mut tables = Vec::new();
    let mut scatters = Vec::new();
    for &subset in &cfg.subsets {
        for &aggregation in &cfg.aggregations {
            tables.push(run_table2(corpus, scores, &cfg, subset, aggregation)?);
            if headline.is_empty() {
                continue;
            }
            let pairs = build_pairs(corpus, scores, &headline, subset, aggregation, cfg.cr_definition)?;
            for (i, v) in headline.iter().enumerate() {
                let points = pairs
                    .rows
                    .iter()
                    .map(|r| ScatterPoint {
                        subset: r.subset,
                        x: r.scores[i],
                        y: r.rating,
                        label: match &r.evaluator {
                            Some(e) => format!("{} {e}", r.key),
                            None => r.key.to_string(),
                        },
                    })
                    .collect();
                scatters.push(ScatterFigure {
                    subset,
                    aggregation,
                    variant: *v,
                    data: ScatterData {
                        title: format!("{} vs {} ({subset}, {aggregation})", cfg.cr_definition, v),
                        x_label: v.label(),
                        y_label: cfg.cr_definition.to_string(),
                        points,
                    },
                });
            }
        }
    }

    let sessions = session_scores(corpus);
    let cr_cri = match cr_cri_agreement(&sessions) {
        Ok(correlation) => Some(CrCriFigure {
            correlation,
            scatter: cr_cri_scatter(corpus, &sessions),
        }),
        Err(e) => {
            log::warn!("CR vs CRi skipped: {e}");
            None
        }
    };

    let main = tables
        .iter()
        .find(|t| t.subset == SubsetSelection::Both && t.aggregation == Aggregation::Averaged)
        .or(tables.first());
    let alpha = cfg.thresholds.iter().copied().fold(f64::INFINITY, f64::min);
    let recommendations = main.map(|t| recommendations(t, alpha)).unwrap_or_default();

    Ok(AnalysisOutput {
        table1,
        tables,
        scatters,
        cr_cri,
        recommendations,
    })
}

fn cr_cri_scatter(corpus: &Corpus, sessions: &[SessionScores]) -> ScatterData {
    ScatterData {
        title: "CR vs CRi per rating session".into(),
        x_label: "CRi".into(),
        y_label: "CR".into(),
        points: sessions
            .iter()
            .filter_map(|s| {
                Some(ScatterPoint {
                    subset: corpus.subset_of(&s.doc_id)?,
                    x: s.cri,
                    y: s.cr,
                    label: format!("{}/{}/{} {}", s.doc_id, s.system, s.latency.label(), s.evaluator),
                })
            })
            .collect(),
    }
}

fn recommendations_markdown(recs: &[Recommendation]) -> String {
    let mut s = String::from("# Recommendations\n");
    for r in recs {
        s.push_str(&format!("\n## {}\n\n{}\n\n", r.question, r.answer));
        for e in &r.evidence {
            s.push_str(&format!("- {e}\n"));
        }
    }
    s
}

/// Renders every table and figure of an analysis into `out_dir`.
pub fn report(analysis: &AnalysisOutput, out_dir: &Path) -> Result<()> {
    if let Some(t1) = &analysis.table1 {
        write_file(&out_dir.join("table1.md"), &table1_markdown(t1))?;
        let cells: Vec<_> = t1
            .panels
            .iter()
            .flat_map(|p| p.rows.iter().flat_map(|r| r.cells.iter()))
            .collect();
        write_records(&out_dir.join("table1.jsonl"), cells)?;
    }
    for t in &analysis.tables {
        let dir = out_dir.join(t.subset.label()).join(t.aggregation.label());
        write_file(&dir.join("table2.md"), &table2_markdown(t))?;
        write_records(&dir.join("correlations.jsonl"), &t.ranking)?;
        write_records(&dir.join("pairwise.jsonl"), &t.pairwise)?;
        write_json(&dir.join("clusters.json"), &t.clusters)?;
        let (svg, spec) = emit_heatmap(HeatmapSpec::from_table2(t))?;
        write_file(&dir.join("heatmap.svg"), &svg)?;
        write_json(&dir.join("heatmap.json"), &spec)?;
    }
    for f in &analysis.scatters {
        let dir = out_dir.join(f.subset.label()).join(f.aggregation.label());
        let name = format!("scatter_{}", slug(&f.variant));
        let (svg, data) = emit_scatter(f.data.clone());
        write_file(&dir.join(format!("{name}.svg")), &svg)?;
        write_json(&dir.join(format!("{name}.json")), &data)?;
    }
    if let Some(f) = &analysis.cr_cri {
        let (svg, data) = emit_scatter(f.scatter.clone());
        write_file(&out_dir.join("cr_vs_cri.svg"), &svg)?;
        write_json(&out_dir.join("cr_vs_cri.json"), &data)?;
        write_json(&out_dir.join("cr_vs_cri_correlation.json"), &f.correlation)?;
    }
    if !analysis.recommendations.is_empty() {
        write_file(
            &out_dir.join("recommendations.md"),
            &recommendations_markdown(&analysis.recommendations),
        )?;
    }
    Ok(())
}

/// Full run from a configuration to an output tree.
pub fn end_to_end(config: &Config, out_dir: &Path) -> Result<AnalysisOutput> {
    let corpus = stage("ingest", ingest(config))?;
    stage("ingest", write_json(&out_dir.join("corpus.json"), &CorpusSummary::of(&corpus)))?;

    let scores = stage("score", score(config, &corpus))?;
    stage("score", write_records(&out_dir.join(SCORES_FILE), &scores))?;

    let rated: Vec<RatingScore> = aggregate_ratings(&corpus.sessions).into_values().collect();
    let sessions = session_scores(&corpus);
    stage("rate", write_records(&out_dir.join("ratings.jsonl"), &rated))?;
    stage("rate", write_records(&out_dir.join("sessions.jsonl"), &sessions))?;

    let analysis = stage("analyze", analyze(config, &corpus, &scores))?;
    stage("analyze", write_json(&out_dir.join(ANALYSIS_FILE), &analysis))?;

    stage("report", report(&analysis, out_dir))?;
    Ok(analysis)
}
