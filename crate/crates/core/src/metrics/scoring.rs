use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::external::{external_score, ScoreCache, ScoreRequest, SegmentScorer};
use super::{
    bleu_document, chrf_document, multi_reference_combine, AlignmentMode, Metric, MetricVariant,
    ReferenceMode,
};
use crate::alignment::{orient_for_variant, single_sequence, MwerOptions, Orientation};
use crate::corpus::{CandidateOutput, Corpus, Document, Latency, ReferenceSet};
use crate::error::{Error, Result};

/// Score of one candidate document under one metric variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    #[serde(flatten)]
    pub variant: MetricVariant,
    pub doc_id: String,
    pub system: String,
    pub latency: Latency,
    pub value: f64,
}

impl ScoreRecord {
    pub fn key(&self) -> crate::corpus::CandidateKey {
        crate::corpus::CandidateKey::new(&self.doc_id, &self.system, self.latency)
    }
}

/// External scorers, their cache, and alignment options.
pub struct ScoringContext {
    pub scorers: BTreeMap<Metric, Box<dyn SegmentScorer>>,
    pub cache: ScoreCache,
    pub mwer: MwerOptions,
}

impl Default for ScoringContext {
    fn default() -> Self {
        ScoringContext {
            scorers: BTreeMap::new(),
            cache: ScoreCache::in_memory(),
            mwer: MwerOptions::default(),
        }
    }
}

impl ScoringContext {
    fn scorer(&self, metric: Metric) -> Result<&dyn SegmentScorer> {
        self.scorers
            .get(&metric)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::Invalid(format!("no external scorer configured for {}", metric.label())))
    }
}

/// Aligned segments ready for a metric. Lexical metrics take all reference
/// streams at once; neural metrics get one pass per reference.
#[derive(Debug, Clone)]
struct Pass {
    sources: Option<Vec<String>>,
    hyps: Vec<String>,
    refs: Vec<Vec<String>>,
}

fn owned<S: AsRef<str>>(xs: &[S]) -> Vec<String> {
    xs.iter().map(|s| s.as_ref().to_string()).collect()
}

fn single_reference_pass(
    variant: &MetricVariant,
    doc: &Document,
    candidate: &CandidateOutput,
    refs: &ReferenceSet,
    mwer: MwerOptions,
) -> Result<Pass> {
    let lexical_multi = !variant.metric.is_neural();
    let cand = candidate.texts();
    let src = doc.source_texts();
    let transl = refs
        .translation(&doc.doc_id)
        .ok_or_else(|| Error::Invalid(format!("no translation reference for `{}`", doc.doc_id)))?;
    let intp = refs.interpreting(&doc.doc_id);
    let need_intp = || {
        intp.ok_or_else(|| Error::Invalid(format!("no interpreting reference for `{}`", doc.doc_id)))
    };

    let pass = match variant.alignment_mode {
        AlignmentMode::Sent => Pass {
            sources: Some(owned(&src)),
            hyps: owned(&cand),
            refs: vec![owned(transl)],
        },
        AlignmentMode::SingleSeq => {
            let mut streams = Vec::new();
            if variant.reference_mode != ReferenceMode::Intp {
                streams.push(vec![single_sequence(transl)]);
            }
            if variant.reference_mode.uses_interpreting() {
                streams.push(vec![single_sequence(need_intp()?)]);
            }
            Pass {
                sources: Some(vec![single_sequence(&src)]),
                hyps: vec![single_sequence(&cand)],
                refs: streams,
            }
        }
        AlignmentMode::Mwer | AlignmentMode::SentMwer => {
            let pair = orient_for_variant(variant, &cand, transl, intp, mwer)?;
            let aligned_to_source = variant.reference_mode == ReferenceMode::Transl
                || pair.orientation == Orientation::InterpretingToTranslation;
            let mut streams = Vec::new();
            if variant.alignment_mode == AlignmentMode::SentMwer {
                debug_assert!(lexical_multi);
                streams.push(owned(transl));
            }
            streams.push(pair.references);
            Pass {
                sources: aligned_to_source.then(|| owned(&src)),
                hyps: pair.hypotheses,
                refs: streams,
            }
        }
    };
    Ok(pass)
}

fn plan(
    variant: &MetricVariant,
    doc: &Document,
    candidate: &CandidateOutput,
    refs: &ReferenceSet,
    mwer: MwerOptions,
) -> Result<Vec<Pass>> {
    if !variant.metric.is_neural() || variant.reference_mode != ReferenceMode::TranslIntp {
        return Ok(vec![single_reference_pass(variant, doc, candidate, refs, mwer)?]);
    }
    // Neural multi-reference: score each reference in its own alignment and average.
    let (transl_align, intp_align) = match variant.alignment_mode {
        AlignmentMode::SingleSeq => (AlignmentMode::SingleSeq, AlignmentMode::SingleSeq),
        _ => (AlignmentMode::Sent, AlignmentMode::Mwer),
    };
    let t = MetricVariant::new(variant.metric, ReferenceMode::Transl, transl_align)?;
    let i = MetricVariant::new(variant.metric, ReferenceMode::Intp, intp_align)?;
    Ok(vec![
        single_reference_pass(&t, doc, candidate, refs, mwer)?,
        single_reference_pass(&i, doc, candidate, refs, mwer)?,
    ])
}

fn lexical_value(metric: Metric, pass: &Pass) -> Result<f64> {
    match metric {
        Metric::Bleu => bleu_document(&pass.hyps, &pass.refs),
        Metric::Chrf => chrf_document(&pass.hyps, &pass.refs),
        _ => unreachable!("neural metrics are scored externally"),
    }
}

struct Job<'a> {
    variant: MetricVariant,
    candidate: &'a CandidateOutput,
    passes: Vec<Pass>,
}

fn run_jobs(jobs: Vec<Job<'_>>, ctx: &ScoringContext) -> Result<Vec<ScoreRecord>> {
    let mut values: Vec<Option<f64>> = jobs
        .par_iter()
        .map(|job| {
            if job.variant.metric.is_neural() {
                Ok(None)
            } else {
                lexical_value(job.variant.metric, &job.passes[0]).map(Some)
            }
        })
        .collect::<Result<_>>()?;

    for metric in [Metric::BertScore, Metric::Comet] {
        let idx: Vec<usize> = (0..jobs.len())
            .filter(|&i| jobs[i].variant.metric == metric)
            .collect();
        if idx.is_empty() {
            continue;
        }
        let scorer = ctx.scorer(metric)?;
        let mut batch = Vec::new();
        for &i in &idx {
            for (p, pass) in jobs[i].passes.iter().enumerate() {
                for (s, hyp) in pass.hyps.iter().enumerate() {
                    let src = if metric.needs_source() {
                        pass.sources.as_ref().map(|v| v[s].clone())
                    } else {
                        None
                    };
                    batch.push(ScoreRequest {
                        id: format!("{i}:{p}:{s}"),
                        src,
                        hyp: hyp.clone(),
                        reference: pass.refs[0][s].clone(),
                    });
                }
            }
        }
        let scores = external_score(scorer, &ctx.cache, &batch)?;
        let mut it = scores.into_iter();
        for &i in &idx {
            let mut per_ref = Vec::with_capacity(jobs[i].passes.len());
            for pass in &jobs[i].passes {
                let seg: Vec<f64> = it.by_ref().take(pass.hyps.len()).map(|r| r.score).collect();
                per_ref.push(seg.iter().sum::<f64>() / seg.len() as f64);
            }
            values[i] = Some(multi_reference_combine(metric, &per_ref)?);
        }
    }

    Ok(jobs
        .iter()
        .zip(values)
        .map(|(job, v)| ScoreRecord {
            variant: job.variant,
            doc_id: job.candidate.key.doc_id.clone(),
            system: job.candidate.key.system.clone(),
            latency: job.candidate.key.latency,
            value: v.expect("every job scored"),
        })
        .collect())
}

/// Scores one candidate document under one variant.
pub fn score_variant(
    variant: &MetricVariant,
    document: &Document,
    candidate: &CandidateOutput,
    references: &ReferenceSet,
    ctx: &ScoringContext,
) -> Result<ScoreRecord> {
    let passes = plan(variant, document, candidate, references, ctx.mwer)?;
    let job = Job {
        variant: *variant,
        candidate,
        passes,
    };
    Ok(run_jobs(vec![job], ctx)?.pop().expect("one record"))
}

/// Scores every candidate in the corpus under every variant. Neural metrics
/// are sent to their scorer as a single batch per metric. Output order is
/// variant-major, then candidate key.
pub fn score_all(
    variants: &[MetricVariant],
    corpus: &Corpus,
    ctx: &ScoringContext,
) -> Result<Vec<ScoreRecord>> {
    let pairs: Vec<(MetricVariant, &CandidateOutput)> = variants
        .iter()
        .flat_map(|v| corpus.candidates.values().map(move |c| (*v, c)))
        .collect();
    let jobs = pairs
        .par_iter()
        .map(|(v, c)| {
            let doc = corpus
                .document(&c.key.doc_id)
                .ok_or_else(|| Error::Invalid(format!("unknown document `{}`", c.key.doc_id)))?;
            let passes = plan(v, doc, c, &corpus.references, ctx.mwer)
                .map_err(|e| Error::Invalid(format!("{v} on ({}): {e}", c.key)))?;
            Ok(Job {
                variant: *v,
                candidate: c,
                passes,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    run_jobs(jobs, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CandidateKey, CandidateSegment, SourceSegment, Subset};
    use crate::metrics::external::ScoreResponse;

    fn doc() -> Document {
        let seg = |i: usize, t: &str| SourceSegment {
            index: i,
            text: t.into(),
            start_ms: i as u64 * 1000,
            end_ms: i as u64 * 1000 + 900,
        };
        Document {
            doc_id: "d1".into(),
            subset: Subset::Common,
            segments: vec![seg(0, "Hello world ."), seg(1, "Good bye .")],
        }
    }

    fn cand(texts: &[&str]) -> CandidateOutput {
        CandidateOutput {
            key: CandidateKey::new("d1", "sys", Latency::Low),
            segments: texts
                .iter()
                .enumerate()
                .map(|(i, t)| CandidateSegment {
                    index: i,
                    text: t.to_string(),
                    events: None,
                })
                .collect(),
        }
    }

    fn refs() -> ReferenceSet {
        let mut r = ReferenceSet::default();
        r.translation.insert("d1".into(), vec!["Hallo schoene neue Welt .".into(), "Auf Wiedersehen und danke .".into()]);
        r.interpreting.insert("d1".into(), vec!["Hallo schoene neue Welt . Auf".into(), "Wiedersehen und danke .".into()]);
        r
    }

    /// Returns 1 when hyp == ref, else 0; records sources it saw.
    struct Exact {
        saw_source: std::sync::Mutex<Vec<Option<String>>>,
        needs_source: bool,
    }

    impl SegmentScorer for Exact {
        fn identity(&self) -> String {
            "exact".into()
        }
        fn requires_source(&self) -> bool {
            self.needs_source
        }
        fn score_batch(&self, batch: &[ScoreRequest]) -> Result<Vec<ScoreResponse>> {
            let mut saw = self.saw_source.lock().unwrap();
            Ok(batch
                .iter()
                .map(|r| {
                    saw.push(r.src.clone());
                    ScoreResponse {
                        id: r.id.clone(),
                        score: if r.hyp == r.reference { 1.0 } else { 0.0 },
                    }
                })
                .collect())
        }
    }

    fn ctx() -> ScoringContext {
        let mut c = ScoringContext::default();
        for (m, src) in [(Metric::Comet, true), (Metric::BertScore, false)] {
            c.scorers.insert(
                m,
                Box::new(Exact {
                    saw_source: Default::default(),
                    needs_source: src,
                }),
            );
        }
        c
    }

    fn v(s: &str) -> MetricVariant {
        s.parse().unwrap()
    }

    #[test]
    fn identity_candidate() {
        let c = cand(&["Hallo schoene neue Welt .", "Auf Wiedersehen und danke ."]);
        let ctx = ctx();
        for variant in ["BLEU/transl/Sent", "chrF/transl/Sent", "BLEU/transl/SingleSeq", "chrF/intp/SingleSeq"] {
            let rec = score_variant(&v(variant), &doc(), &c, &refs(), &ctx).unwrap();
            assert_eq!(rec.value, 100.0, "{variant}");
        }
        let rec = score_variant(&v("BLEU/intp/mWER"), &doc(), &c, &refs(), &ctx).unwrap();
        assert_eq!(rec.value, 100.0);
        let rec = score_variant(&v("COMET/transl/Sent"), &doc(), &c, &refs(), &ctx).unwrap();
        assert_eq!(rec.value, 1.0);
        // interpreting re-cut onto translation boundaries matches exactly
        let rec = score_variant(&v("COMET/intp/mWER"), &doc(), &c, &refs(), &ctx).unwrap();
        assert_eq!(rec.value, 1.0);
        // BertScore re-cuts the candidate onto interpreting chunks
        let rec = score_variant(&v("BertScore/intp/mWER"), &doc(), &c, &refs(), &ctx).unwrap();
        assert_eq!(rec.value, 1.0);
        // per-segment: transl Sent = 1, intp SingleSeq = 1
        let rec = score_variant(&v("COMET/transl+intp/SingleSeq"), &doc(), &c, &refs(), &ctx).unwrap();
        assert_eq!(rec.value, 1.0);
    }

    #[test]
    fn neural_mean_of_segments_and_references() {
        let c = cand(&["Hallo schoene neue Welt .", "Tschuess ."]);
        let ctx = ctx();
        let rec = score_variant(&v("COMET/transl/Sent"), &doc(), &c, &refs(), &ctx).unwrap();
        assert_eq!(rec.value, 0.5);
        // transl/Sent gives 0.5, intp/SingleSeq gives 0
        let rec = score_variant(&v("BertScore/transl+intp/SingleSeq"), &doc(), &c, &refs(), &ctx).unwrap();
        assert_eq!(rec.value, 0.0);
        let rec = score_variant(&v("BertScore/transl+intp/Sent+mWER"), &doc(), &c, &refs(), &ctx).unwrap();
        assert_eq!(rec.value, 0.25);
    }

    #[test]
    fn comet_always_gets_sources() {
        let c = cand(&["Hallo schoene neue Welt .", "Tschuess ."]);
        let ctx = ctx();
        for variant in [
            "COMET/transl/Sent",
            "COMET/transl/SingleSeq",
            "COMET/intp/SingleSeq",
            "COMET/intp/mWER",
            "COMET/transl+intp/SingleSeq",
        ] {
            score_variant(&v(variant), &doc(), &c, &refs(), &ctx).unwrap();
        }
    }

    #[test]
    fn missing_scorer_is_an_error() {
        let c = cand(&["a", "b"]);
        let err = score_variant(&v("COMET/transl/Sent"), &doc(), &c, &refs(), &ScoringContext::default());
        assert!(err.is_err());
    }

    #[test]
    fn record_serialization_is_flat() {
        let rec = ScoreRecord {
            variant: v("BLEU/intp/mWER"),
            doc_id: "d".into(),
            system: "s".into(),
            latency: Latency::Medium,
            value: 12.5,
        };
        let json = serde_json::to_string(&rec).unwrap();
        assert_eq!(
            json,
            r#"{"metric":"BLEU","reference_mode":"intp","alignment_mode":"mWER","doc_id":"d","system":"s","latency":"medium","value":12.5}"#
        );
        let back: ScoreRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rec);
    }
}
