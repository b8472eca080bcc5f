//! Pairs human ratings with metric scores and runs the correlation study.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{CandidateKey, Corpus, Subset};
use crate::error::{Error, Result};
use crate::metrics::{Metric, MetricVariant, ScoreRecord};
use crate::ratings::{aggregate_ratings, cr, cri, score_session, CrDefinition};
use crate::stats::{
    correlation_p_value, dependent_correlation_test, pearson_labeled, pearson_r,
    significance_clusters, CorrelationResult, DependentTest,
};

/// Correlations at or below this are not considered strong.
pub const STRONG_CORRELATION: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SubsetSelection {
    #[serde(rename = "both")]
    Both,
    Common,
    #[serde(alias = "Non-Native")]
    NonNative,
}

impl SubsetSelection {
    pub const ALL: [SubsetSelection; 3] = [
        SubsetSelection::Both,
        SubsetSelection::Common,
        SubsetSelection::NonNative,
    ];

    pub fn includes(self, subset: Subset) -> bool {
        match self {
            SubsetSelection::Both => true,
            SubsetSelection::Common => subset == Subset::Common,
            SubsetSelection::NonNative => subset == Subset::NonNative,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SubsetSelection::Both => "both",
            SubsetSelection::Common => "Common",
            SubsetSelection::NonNative => "NonNative",
        }
    }
}

impl fmt::Display for SubsetSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SubsetSelection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "both" => Ok(SubsetSelection::Both),
            "Common" | "common" => Ok(SubsetSelection::Common),
            "NonNative" | "Non-Native" | "nonnative" | "non-native" => Ok(SubsetSelection::NonNative),
            _ => Err(Error::Invalid(format!("unknown subset `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// One averaged rating per candidate document.
    Averaged,
    /// One row per rating session.
    AllRatings,
}

impl Aggregation {
    pub const ALL: [Aggregation; 2] = [Aggregation::Averaged, Aggregation::AllRatings];

    pub fn label(self) -> &'static str {
        match self {
            Aggregation::Averaged => "averaged",
            Aggregation::AllRatings => "all_ratings",
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "default_subsets")]
    pub subsets: Vec<SubsetSelection>,
    #[serde(default = "default_aggregations")]
    pub aggregations: Vec<Aggregation>,
    #[serde(default = "MetricVariant::ranking_universe")]
    pub variants: Vec<MetricVariant>,
    #[serde(default)]
    pub cr_definition: CrDefinition,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    #[serde(default)]
    pub dependent_test: DependentTest,
}

fn default_subsets() -> Vec<SubsetSelection> {
    SubsetSelection::ALL.to_vec()
}

fn default_aggregations() -> Vec<Aggregation> {
    Aggregation::ALL.to_vec()
}

fn default_thresholds() -> Vec<f64> {
    vec![0.05, 0.1]
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            subsets: default_subsets(),
            aggregations: default_aggregations(),
            variants: MetricVariant::ranking_universe(),
            cr_definition: CrDefinition::Cr,
            thresholds: default_thresholds(),
            dependent_test: DependentTest::WilliamsT,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() {
            return Err(Error::Invalid("analysis needs at least one metric variant".into()));
        }
        if let Some(t) = self.thresholds.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(Error::Invalid(format!("threshold {t} outside (0, 1)")));
        }
        if self.subsets.is_empty() || self.aggregations.is_empty() {
            return Err(Error::Invalid("at least one subset and one aggregation required".into()));
        }
        Ok(())
    }
}

/// One rated item and its score under every variant of a [`PairTable`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub key: CandidateKey,
    pub subset: Subset,
    /// Set in all-ratings mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluator: Option<String>,
    pub rating: f64,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTable {
    pub subset: SubsetSelection,
    pub aggregation: Aggregation,
    pub cr_definition: CrDefinition,
    pub variants: Vec<MetricVariant>,
    pub rows: Vec<PairRow>,
}

impl PairTable {
    pub fn ratings(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.rating).collect()
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.scores[i]).collect()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn correlation(&self, i: usize) -> Result<CorrelationResult> {
        pearson_labeled(
            &self.ratings(),
            &self.column(i),
            &self.cr_definition.to_string(),
            &self.variants[i].label(),
        )
    }
}

/// Pairs ratings with scores for the requested variants.
///
/// Candidates without any rating, or lacking a score under any of the
/// variants, contribute no rows.
pub fn build_pairs(
    corpus: &Corpus,
    scores: &[ScoreRecord],
    variants: &[MetricVariant],
    subset: SubsetSelection,
    aggregation: Aggregation,
    definition: CrDefinition,
) -> Result<PairTable> {
    let column: HashMap<MetricVariant, usize> =
        variants.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let mut by_key: BTreeMap<CandidateKey, Vec<Option<f64>>> = BTreeMap::new();
    for s in scores {
        if let Some(&i) = column.get(&s.variant) {
            by_key
                .entry(s.key())
                .or_insert_with(|| vec![None; variants.len()])[i] = Some(s.value);
        }
    }
    let complete: BTreeMap<CandidateKey, Vec<f64>> = by_key
        .into_iter()
        .filter_map(|(k, v)| {
            let all: Option<Vec<f64>> = v.into_iter().collect();
            if all.is_none() {
                log::warn!("({k}) lacks scores for some variants; excluded");
            }
            all.map(|a| (k, a))
        })
        .collect();

    let in_subset = |key: &CandidateKey| {
        corpus
            .subset_of(&key.doc_id)
            .filter(|s| subset.includes(*s))
    };

    let mut rows = Vec::new();
    match aggregation {
        Aggregation::Averaged => {
            for (key, rating) in aggregate_ratings(&corpus.sessions) {
                let (Some(sub), Some(sc)) = (in_subset(&key), complete.get(&key)) else {
                    continue;
                };
                rows.push(PairRow {
                    key,
                    subset: sub,
                    evaluator: None,
                    rating: rating.value(definition),
                    scores: sc.clone(),
                });
            }
        }
        Aggregation::AllRatings => {
            for s in &corpus.sessions {
                let key = s.key();
                let (Some(sub), Some(sc)) = (in_subset(&key), complete.get(&key)) else {
                    continue;
                };
                let Ok(rating) = score_session(s, definition) else {
                    continue;
                };
                rows.push(PairRow {
                    key,
                    subset: sub,
                    evaluator: Some(s.evaluator_id.clone()),
                    rating,
                    scores: sc.clone(),
                });
            }
            rows.sort_by(|a, b| (&a.key, &a.evaluator).cmp(&(&b.key, &b.evaluator)));
        }
    }
    if rows.is_empty() {
        return Err(Error::Empty(format!(
            "no rated and scored candidates for subset {subset}, {aggregation}"
        )));
    }
    Ok(PairTable {
        subset,
        aggregation,
        cr_definition: definition,
        variants: variants.to_vec(),
        rows,
    })
}

/// Machine-readable correlation row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRecord {
    pub subset: SubsetSelection,
    pub aggregation: Aggregation,
    pub metric_variant: MetricVariant,
    pub n: usize,
    pub r: f64,
    pub p: f64,
}

impl CorrelationRecord {
    pub fn is_strong(&self) -> bool {
        self.r > STRONG_CORRELATION
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub subset: SubsetSelection,
    pub n: usize,
    pub cells: Vec<CorrelationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Panel {
    pub aggregation: Aggregation,
    pub rows: Vec<Table1Row>,
}

/// Correlation of each headline metric (translation reference, sentence
/// alignment) with ratings, per aggregation mode and subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1 {
    pub cr_definition: CrDefinition,
    pub metrics: Vec<MetricVariant>,
    pub panels: Vec<Table1Panel>,
}

pub fn run_table1(corpus: &Corpus, scores: &[ScoreRecord], config: &AnalysisConfig) -> Result<Table1> {
    config.validate()?;
    let available: Vec<MetricVariant> = MetricVariant::headline()
        .into_iter()
        .filter(|v| scores.iter().any(|s| s.variant == *v))
        .collect();
    if available.is_empty() {
        return Err(Error::Empty("no headline metric scores available".into()));
    }
    let mut panels = Vec::new();
    for &aggregation in &config.aggregations {
        let mut rows = Vec::new();
        for &subset in &config.subsets {
            let table = build_pairs(corpus, scores, &available, subset, aggregation, config.cr_definition)?;
            let mut cells = Vec::new();
            for (i, v) in available.iter().enumerate() {
                let c = table.correlation(i)?;
                cells.push(CorrelationRecord {
                    subset,
                    aggregation,
                    metric_variant: *v,
                    n: c.n,
                    r: c.r,
                    p: c.p,
                });
            }
            rows.push(Table1Row {
                subset,
                n: table.len(),
                cells,
            });
        }
        panels.push(Table1Panel { aggregation, rows });
    }
    Ok(Table1 {
        cr_definition: config.cr_definition,
        metrics: available,
        panels,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparison {
    pub variant_a: MetricVariant,
    pub variant_b: MetricVariant,
    pub r_a: f64,
    pub r_b: f64,
    pub r_ab: f64,
    pub n: usize,
    pub t: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterBoundaries {
    pub threshold: f64,
    /// Boundary after this many top-ranked variants.
    pub after: Vec<usize>,
}

/// Variants ranked by correlation with ratings, with every pairwise
/// dependent-correlation test and the resulting cluster boundaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2 {
    pub subset: SubsetSelection,
    pub aggregation: Aggregation,
    pub cr_definition: CrDefinition,
    pub test: DependentTest,
    pub n: usize,
    pub ranking: Vec<CorrelationRecord>,
    /// Row-major over `ranking`, diagonal excluded.
    pub pairwise: Vec<PairwiseComparison>,
    pub clusters: Vec<ClusterBoundaries>,
}

impl Table2 {
    /// Square p-value matrix in ranking order with ones on the diagonal.
    pub fn p_matrix(&self) -> Vec<Vec<f64>> {
        let v = self.ranking.len();
        let mut m = vec![vec![1.0; v]; v];
        let pos: HashMap<MetricVariant, usize> = self
            .ranking
            .iter()
            .enumerate()
            .map(|(i, r)| (r.metric_variant, i))
            .collect();
        for c in &self.pairwise {
            m[pos[&c.variant_a]][pos[&c.variant_b]] = c.p;
        }
        m
    }
}

pub fn run_table2(
    corpus: &Corpus,
    scores: &[ScoreRecord],
    config: &AnalysisConfig,
    subset: SubsetSelection,
    aggregation: Aggregation,
) -> Result<Table2> {
    config.validate()?;
    let mut variants = config.variants.clone();
    variants.sort();
    variants.dedup();
    let table = build_pairs(corpus, scores, &variants, subset, aggregation, config.cr_definition)?;
    let ratings = table.ratings();
    let columns: Vec<Vec<f64>> = (0..variants.len()).map(|i| table.column(i)).collect();
    let n = table.len();

    let mut ranked: Vec<(usize, f64)> = Vec::with_capacity(variants.len());
    for (i, col) in columns.iter().enumerate() {
        ranked.push((i, pearson_r(&ratings, col)?));
    }
    // variants are pre-sorted, so the stable sort breaks ties by variant order
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));

    let ranking: Vec<CorrelationRecord> = ranked
        .iter()
        .map(|&(i, r)| CorrelationRecord {
            subset,
            aggregation,
            metric_variant: variants[i],
            n,
            r,
            p: correlation_p_value(r, n),
        })
        .collect();

    let mut pairwise = Vec::new();
    for &(a, ra) in &ranked {
        for &(b, rb) in &ranked {
            if a == b {
                continue;
            }
            let rab = pearson_r(&columns[a], &columns[b])?;
            let res = dependent_correlation_test(ra, rb, rab, n, config.dependent_test)?;
            pairwise.push(PairwiseComparison {
                variant_a: variants[a],
                variant_b: variants[b],
                r_a: ra,
                r_b: rb,
                r_ab: rab,
                n,
                t: res.statistic,
                p: res.p,
            });
        }
    }

    let singular = pairwise.iter().filter(|c| c.r_ab.abs() >= 1.0 - 1e-9).count() / 2;
    if singular > 0 {
        log::warn!(
            "{subset}/{aggregation}: {singular} variant pairs have perfectly correlated scores and cannot be separated (p = 1)"
        );
    }

    let mut out = Table2 {
        subset,
        aggregation,
        cr_definition: config.cr_definition,
        test: config.dependent_test,
        n,
        ranking,
        pairwise,
        clusters: Vec::new(),
    };
    let p = out.p_matrix();
    let mut thresholds = config.thresholds.clone();
    thresholds.sort_by(f64::total_cmp);
    out.clusters = thresholds
        .into_iter()
        .map(|threshold| ClusterBoundaries {
            threshold,
            after: significance_clusters(&p, threshold),
        })
        .collect();
    Ok(out)
}

/// Per-session CR and CRi, for comparing the two definitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionScores {
    pub evaluator: String,
    pub doc_id: String,
    pub system: String,
    pub latency: crate::corpus::Latency,
    pub cr: f64,
    pub cri: f64,
}

pub fn session_scores(corpus: &Corpus) -> Vec<SessionScores> {
    corpus
        .sessions
        .iter()
        .filter_map(|s| {
            Some(SessionScores {
                evaluator: s.evaluator_id.clone(),
                doc_id: s.doc_id.clone(),
                system: s.system_id.clone(),
                latency: s.latency,
                cr: cr(s).ok()?,
                cri: cri(s).ok()?,
            })
        })
        .collect()
}

pub fn cr_cri_agreement(sessions: &[SessionScores]) -> Result<CorrelationResult> {
    let x: Vec<f64> = sessions.iter().map(|s| s.cr).collect();
    let y: Vec<f64> = sessions.iter().map(|s| s.cri).collect();
    pearson_labeled(&x, &y, "CR", "CRi")
}

/// Data-driven answers to "which metric, which reference, which alignment".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub question: String,
    pub answer: String,
    pub evidence: Vec<String>,
}

pub fn recommendations(table: &Table2, alpha: f64) -> Vec<Recommendation> {
    let r_of: HashMap<MetricVariant, f64> = table
        .ranking
        .iter()
        .map(|c| (c.metric_variant, c.r))
        .collect();
    let p_of = |a: &MetricVariant, b: &MetricVariant| {
        table
            .pairwise
            .iter()
            .find(|c| c.variant_a == *a && c.variant_b == *b)
            .map(|c| c.p)
    };
    let describe = |a: &MetricVariant, b: &MetricVariant| -> String {
        let p = p_of(a, b).unwrap_or(1.0);
        format!(
            "{} (r={:.2}) vs {} (r={:.2}): p={:.3}{}",
            a,
            r_of[a],
            b,
            r_of[b],
            p,
            if p < alpha { ", significant" } else { "" }
        )
    };
    let mut out = Vec::new();

    // best variant per metric, in ranking order
    let mut best_per_metric: Vec<MetricVariant> = Vec::new();
    for c in &table.ranking {
        if !best_per_metric.iter().any(|v| v.metric == c.metric_variant.metric) {
            best_per_metric.push(c.metric_variant);
        }
    }
    if let Some(top) = best_per_metric.first() {
        let evidence: Vec<String> = best_per_metric
            .windows(2)
            .map(|w| describe(&w[0], &w[1]))
            .collect();
        let order: Vec<&str> = best_per_metric.iter().map(|v| v.metric.label()).collect();
        out.push(Recommendation {
            question: "metric".into(),
            answer: format!("{} (fallback order: {})", top.metric.label(), order.join(" > ")),
            evidence,
        });
    }

    use crate::metrics::{AlignmentMode as A, ReferenceMode as R};
    let lookup = |m: Metric, r: R, a: A| {
        MetricVariant::new(m, r, a)
            .ok()
            .filter(|v| r_of.contains_key(v))
    };

    let mut evidence = Vec::new();
    let (mut transl_wins, mut intp_wins) = (0, 0);
    for m in Metric::ALL {
        if let (Some(t), Some(i)) = (
            lookup(m, R::Transl, A::SingleSeq),
            lookup(m, R::Intp, A::SingleSeq),
        ) {
            if r_of[&t] >= r_of[&i] {
                transl_wins += 1;
            } else {
                intp_wins += 1;
            }
            evidence.push(describe(&t, &i));
        }
        if let (Some(t), Some(b)) = (
            lookup(m, R::Transl, A::SingleSeq),
            lookup(m, R::TranslIntp, A::SingleSeq),
        ) {
            evidence.push(describe(&t, &b));
        }
    }
    if !evidence.is_empty() {
        let answer = if transl_wins >= intp_wins {
            "translation"
        } else {
            "interpreting"
        };
        out.push(Recommendation {
            question: "reference".into(),
            answer: answer.into(),
            evidence,
        });
    }

    let mut evidence = Vec::new();
    let mut per_metric = Vec::new();
    for m in Metric::ALL {
        if let (Some(s), Some(w)) = (
            lookup(m, R::Intp, A::SingleSeq),
            lookup(m, R::Intp, A::Mwer),
        ) {
            let better = if r_of[&s] >= r_of[&w] { "SingleSeq" } else { "mWER" };
            per_metric.push(format!("{}: {better}", m.label()));
            evidence.push(describe(&s, &w));
        }
    }
    if !evidence.is_empty() {
        out.push(Recommendation {
            question: "alignment (unaligned reference)".into(),
            answer: per_metric.join(", "),
            evidence,
        });
    }
    out
}
