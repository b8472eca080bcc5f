//! Corpus BLEU over the segments of one document.
//!
//! Case-sensitive, `13a` tokenization, orders 1-4, exponential smoothing,
//! no effective order. Multiple references clip n-gram counts against the
//! per-segment maximum and use the closest reference length.

use std::collections::HashMap;

use super::tokenizer::{py_split, tokenize_13a};
use super::check_references;
use crate::error::Result;

pub const MAX_ORDER: usize = 4;

/// Sufficient statistics; additive over segments.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub hyp_len: usize,
    pub ref_len: usize,
    pub correct: [usize; MAX_ORDER],
    pub total: [usize; MAX_ORDER],
}

impl std::ops::AddAssign for BleuStats {
    fn add_assign(&mut self, o: Self) {
        self.hyp_len += o.hyp_len;
        self.ref_len += o.ref_len;
        for n in 0..MAX_ORDER {
            self.correct[n] += o.correct[n];
            self.total[n] += o.total[n];
        }
    }
}

fn ngram_counts<'a>(tokens: &'a [&'a str], n: usize) -> HashMap<&'a [&'a str], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

fn closest_ref_len(hyp_len: usize, ref_lens: &[usize]) -> usize {
    let mut best: Option<(usize, usize)> = None;
    for &r in ref_lens {
        let diff = hyp_len.abs_diff(r);
        best = match best {
            Some((d, l)) if diff > d || (diff == d && r >= l) => Some((d, l)),
            _ => Some((diff, r)),
        };
    }
    best.map(|(_, l)| l).unwrap_or(0)
}

/// Statistics for one segment against any number of references.
pub fn segment_stats<S: AsRef<str>>(hyp: &str, refs: &[S]) -> BleuStats {
    let hyp_tok = tokenize_13a(hyp);
    let hyp_words: Vec<&str> = py_split(&hyp_tok).collect();
    let ref_toks: Vec<String> = refs.iter().map(|r| tokenize_13a(r.as_ref())).collect();
    let ref_words: Vec<Vec<&str>> = ref_toks.iter().map(|r| py_split(r).collect()).collect();
    let ref_lens: Vec<usize> = ref_words.iter().map(Vec::len).collect();

    let mut stats = BleuStats {
        hyp_len: hyp_words.len(),
        ref_len: closest_ref_len(hyp_words.len(), &ref_lens),
        ..Default::default()
    };
    for n in 1..=MAX_ORDER {
        let mut max_ref: HashMap<&[&str], usize> = HashMap::new();
        for words in &ref_words {
            for (g, c) in ngram_counts(words, n) {
                let e = max_ref.entry(g).or_insert(0);
                *e = (*e).max(c);
            }
        }
        for (g, c) in ngram_counts(&hyp_words, n) {
            stats.total[n - 1] += c;
            if let Some(&r) = max_ref.get(g) {
                stats.correct[n - 1] += c.min(r);
            }
        }
    }
    stats
}

/// BLEU in `[0, 100]` from accumulated statistics.
pub fn bleu_from_stats(stats: &BleuStats) -> f64 {
    if stats.correct.iter().all(|&c| c == 0) {
        return 0.0;
    }
    let bp = if stats.hyp_len < stats.ref_len {
        (1.0 - stats.ref_len as f64 / stats.hyp_len as f64).exp()
    } else {
        1.0
    };
    let mut smooth = 1.0;
    let mut log_sum = 0.0;
    for n in 0..MAX_ORDER {
        if stats.total[n] == 0 {
            // No n-grams of this order at all: the geometric mean collapses.
            return 0.0;
        }
        let p = if stats.correct[n] == 0 {
            smooth *= 2.0;
            1.0 / (smooth * stats.total[n] as f64)
        } else {
            stats.correct[n] as f64 / stats.total[n] as f64
        };
        log_sum += p.ln();
    }
    100.0 * bp * (log_sum / MAX_ORDER as f64).exp()
}

/// Document BLEU. `refs` holds one or more reference streams, each with one
/// entry per hypothesis segment.
pub fn bleu_document<H, R>(hyp_segments: &[H], refs: &[Vec<R>]) -> Result<f64>
where
    H: AsRef<str>,
    R: AsRef<str>,
{
    check_references(hyp_segments.len(), refs)?;
    let mut stats = BleuStats::default();
    for (i, hyp) in hyp_segments.iter().enumerate() {
        let seg_refs: Vec<&str> = refs.iter().map(|r| r[i].as_ref()).collect();
        stats += segment_stats(hyp.as_ref(), &seg_refs);
    }
    Ok(bleu_from_stats(&stats))
}
