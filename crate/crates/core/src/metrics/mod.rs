//! Document-level metric scores.
//!
//! BLEU and chrF are computed natively. COMET and BertScore are delegated to
//! external scorers through [`external`].

mod bleu;
mod chrf;
pub mod external;
mod scoring;
mod tokenizer;
mod variant;

pub use bleu::{bleu_document, bleu_from_stats, BleuStats};
pub use chrf::{chrf_document, chrf_from_stats, ChrfStats};
pub use external::{external_score, CommandScorer, ScoreCache, ScoreRequest, ScoreResponse, SegmentScorer};
pub use scoring::{score_all, score_variant, ScoreRecord, ScoringContext};
pub use tokenizer::tokenize_13a;
pub use variant::{AlignmentMode, Metric, MetricVariant, ReferenceMode};

pub mod segment {
    //! Per-segment sufficient statistics.
    pub use super::bleu::segment_stats as bleu_stats;
    pub use super::chrf::segment_stats as chrf_stats;
}

use crate::error::{Error, Result};

fn check_references<R>(hyp_len: usize, refs: &[Vec<R>]) -> Result<()> {
    if refs.is_empty() {
        return Err(Error::Invalid("at least one reference is required".into()));
    }
    for (i, r) in refs.iter().enumerate() {
        if r.len() != hyp_len {
            return Err(Error::SegmentMismatch {
                hyp: hyp_len,
                reference: i,
                found: r.len(),
            });
        }
    }
    Ok(())
}

/// Combines per-reference document scores of a neural metric by their mean.
pub fn multi_reference_combine(metric: Metric, per_reference: &[f64]) -> Result<f64> {
    if !metric.is_neural() {
        return Err(Error::Invalid(format!(
            "{} combines references internally",
            metric.label()
        )));
    }
    if per_reference.is_empty() {
        return Err(Error::Empty("no per-reference scores to combine".into()));
    }
    Ok(per_reference.iter().sum::<f64>() / per_reference.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn combine_examples() {
        let c = |xs: &[f64]| multi_reference_combine(Metric::Comet, xs).unwrap();
        assert!((c(&[0.2, 0.4]) - 0.3).abs() < 1e-15);
        assert_eq!(c(&[0.7]), 0.7);
        assert!((c(&[0.1, 0.2, 0.6]) - 0.3).abs() < 1e-15);
        assert!(multi_reference_combine(Metric::Comet, &[]).is_err());
        assert!(multi_reference_combine(Metric::Bleu, &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn combine_permutation_invariant(mut xs in proptest::collection::vec(-2.0f64..2.0, 1..8), seed in 0usize..1000) {
            let a = multi_reference_combine(Metric::BertScore, &xs).unwrap();
            let k = seed % xs.len();
            xs.rotate_left(k);
            xs.reverse();
            let b = multi_reference_combine(Metric::BertScore, &xs).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
