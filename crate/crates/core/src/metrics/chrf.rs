//! Character n-gram F-score (orders 1-6, beta 2, whitespace ignored).

use std::collections::HashMap;

use super::check_references;
use super::tokenizer::is_py_whitespace;
use crate::error::Result;

pub const CHAR_ORDER: usize = 6;
pub const BETA: f64 = 2.0;

/// Per-order `[hyp, ref, match]` counts; additive over segments.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ChrfStats {
    pub counts: [[usize; 3]; CHAR_ORDER],
}

impl std::ops::AddAssign for ChrfStats {
    fn add_assign(&mut self, o: Self) {
        for (a, b) in self.counts.iter_mut().zip(o.counts.iter()) {
            for k in 0..3 {
                a[k] += b[k];
            }
        }
    }
}

struct CharNgrams {
    chars: Vec<char>,
}

impl CharNgrams {
    fn new(text: &str) -> Self {
        CharNgrams {
            chars: text.chars().filter(|c| !is_py_whitespace(*c)).collect(),
        }
    }

    fn counts(&self) -> Vec<HashMap<&[char], usize>> {
        (1..=CHAR_ORDER)
            .map(|n| {
                let mut m = HashMap::new();
                if self.chars.len() >= n {
                    for w in self.chars.windows(n) {
                        *m.entry(w).or_insert(0) += 1;
                    }
                }
                m
            })
            .collect()
    }
}

/// F-score in `[0, 100]`: precision and recall are averaged over the orders
/// where both sides have n-grams, then combined.
pub fn chrf_from_stats(stats: &ChrfStats) -> f64 {
    let factor = BETA * BETA;
    let (mut avg_prec, mut avg_rec, mut effective) = (0.0, 0.0, 0usize);
    for &[n_hyp, n_ref, n_match] in &stats.counts {
        if n_hyp > 0 && n_ref > 0 {
            avg_prec += n_match as f64 / n_hyp as f64;
            avg_rec += n_match as f64 / n_ref as f64;
            effective += 1;
        }
    }
    if effective == 0 {
        return 0.0;
    }
    avg_prec /= effective as f64;
    avg_rec /= effective as f64;
    if avg_prec + avg_rec == 0.0 {
        return 0.0;
    }
    100.0 * (1.0 + factor) * avg_prec * avg_rec / (factor * avg_prec + avg_rec)
}

/// Statistics against the single best-scoring reference (first wins ties).
pub fn segment_stats<S: AsRef<str>>(hyp: &str, refs: &[S]) -> ChrfStats {
    let hyp_chars = CharNgrams::new(hyp);
    let hyp_counts = hyp_chars.counts();
    let mut best: Option<(f64, ChrfStats)> = None;
    for r in refs {
        let ref_chars = CharNgrams::new(r.as_ref());
        let ref_counts = ref_chars.counts();
        let mut stats = ChrfStats::default();
        for (n, (h, rc)) in hyp_counts.iter().zip(&ref_counts).enumerate() {
            let mut n_hyp = 0;
            let mut n_match = 0;
            for (g, &c) in h {
                n_hyp += c;
                if let Some(&rcount) = rc.get(g) {
                    n_match += c.min(rcount);
                }
            }
            // hypothesis n-grams are not counted when the reference has none
            if rc.is_empty() {
                n_hyp = 0;
            }
            stats.counts[n] = [n_hyp, rc.values().sum(), n_match];
        }
        let f = chrf_from_stats(&stats);
        if best.as_ref().is_none_or(|(bf, _)| f > *bf) {
            best = Some((f, stats));
        }
    }
    best.map(|(_, s)| s).unwrap_or_default()
}

/// Document chrF with statistics pooled over segments.
pub fn chrf_document<H, R>(hyp_segments: &[H], refs: &[Vec<R>]) -> Result<f64>
where
    H: AsRef<str>,
    R: AsRef<str>,
{
    check_references(hyp_segments.len(), refs)?;
    let mut stats = ChrfStats::default();
    for (i, hyp) in hyp_segments.iter().enumerate() {
        let seg_refs: Vec<&str> = refs.iter().map(|r| r[i].as_ref()).collect();
        stats += segment_stats(hyp.as_ref(), &seg_refs);
    }
    Ok(chrf_from_stats(&stats))
}
