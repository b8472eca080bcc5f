//! Pairing hypothesis and reference segments when their segmentations differ.

mod mwer;

pub use mwer::{edit_distance, mwer_resegment, Resegmentation, Segmentation};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{AlignmentMode, Metric, MetricVariant, ReferenceMode};

/// Joins segments into one whitespace-normalized sequence.
pub fn single_sequence<S: AsRef<str>>(segments: &[S]) -> String {
    let mut out = String::new();
    for tok in segments.iter().flat_map(|s| s.as_ref().split_whitespace()) {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(tok);
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MwerOptions {
    /// Compare tokens case-insensitively. Output keeps the original casing.
    #[serde(default)]
    pub lowercase: bool,
}

/// Re-cuts the token stream of `hyp_segments` onto the segmentation of
/// `ref_segments`. Returns one string per reference segment and the total
/// edit cost.
pub fn resegment_text<H: AsRef<str>, R: AsRef<str>>(
    hyp_segments: &[H],
    ref_segments: &[R],
    options: MwerOptions,
) -> Result<(Vec<String>, usize)> {
    let hyp: Vec<&str> = hyp_segments
        .iter()
        .flat_map(|s| s.as_ref().split_whitespace())
        .collect();
    let refs: Vec<Vec<&str>> = ref_segments
        .iter()
        .map(|s| s.as_ref().split_whitespace().collect())
        .collect();
    let res = if options.lowercase {
        let hyp_lc: Vec<String> = hyp.iter().map(|t| t.to_lowercase()).collect();
        let refs_lc: Vec<Vec<String>> = refs
            .iter()
            .map(|r| r.iter().map(|t| t.to_lowercase()).collect())
            .collect();
        let rr: Vec<&[String]> = refs_lc.iter().map(Vec::as_slice).collect();
        mwer_resegment(&hyp_lc, &rr)?
    } else {
        let rr: Vec<&[&str]> = refs.iter().map(Vec::as_slice).collect();
        mwer_resegment(&hyp, &rr)?
    };
    let texts = res
        .segmentation
        .apply(&hyp)
        .map(|span| span.join(" "))
        .collect();
    Ok((texts, res.cost))
}

/// Which side of the pairing was re-cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// The candidate was re-cut onto the reference segmentation.
    HypothesisToReference,
    /// The interpreting transcript was re-cut onto the translation
    /// (source-aligned) segmentation; the candidate keeps its own segments.
    InterpretingToTranslation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrientedPair {
    pub orientation: Orientation,
    pub hypotheses: Vec<String>,
    pub references: Vec<String>,
    pub cost: usize,
}

/// Resolves the mWER pairing for a variant.
///
/// * COMET with the interpreting reference, and the interpreting half of
///   `Sent+mWER`: interpreting is re-cut to the translation segmentation so
///   that every triple stays aligned with the source.
/// * Everything else: the candidate is re-cut to the reference segmentation.
pub fn orient_for_variant<C, T, I>(
    variant: &MetricVariant,
    candidate: &[C],
    translation: &[T],
    interpreting: Option<&[I]>,
    options: MwerOptions,
) -> Result<OrientedPair>
where
    C: AsRef<str>,
    T: AsRef<str>,
    I: AsRef<str>,
{
    let owned = |xs: &[C]| xs.iter().map(|s| s.as_ref().to_string()).collect::<Vec<_>>();
    let need_intp = || {
        interpreting.ok_or_else(|| Error::Invalid("interpreting reference missing".into()))
    };
    match (variant.alignment_mode, variant.reference_mode) {
        (AlignmentMode::Mwer, ReferenceMode::Transl) => {
            let (hyps, cost) = resegment_text(candidate, translation, options)?;
            Ok(OrientedPair {
                orientation: Orientation::HypothesisToReference,
                hypotheses: hyps,
                references: translation.iter().map(|s| s.as_ref().to_string()).collect(),
                cost,
            })
        }
        (AlignmentMode::Mwer, ReferenceMode::Intp) if variant.metric != Metric::Comet => {
            let intp = need_intp()?;
            let (hyps, cost) = resegment_text(candidate, intp, options)?;
            Ok(OrientedPair {
                orientation: Orientation::HypothesisToReference,
                hypotheses: hyps,
                references: intp.iter().map(|s| s.as_ref().to_string()).collect(),
                cost,
            })
        }
        (AlignmentMode::Mwer, ReferenceMode::Intp) | (AlignmentMode::SentMwer, _) => {
            let intp = need_intp()?;
            let (refs, cost) = resegment_text(intp, translation, options)?;
            Ok(OrientedPair {
                orientation: Orientation::InterpretingToTranslation,
                hypotheses: owned(candidate),
                references: refs,
                cost,
            })
        }
        _ => Err(Error::IllegalVariant(format!(
            "{variant} does not use mWER alignment"
        ))),
    }
}
