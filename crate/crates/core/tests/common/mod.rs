//! Independent oracles shared by the integration and acceptance tests.
//! Nothing here calls into the library's metric or statistics code.

#![allow(dead_code)]

use std::path::PathBuf;

use serde::Deserialize;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

#[derive(Deserialize)]
pub struct BleuCase {
    pub name: String,
    pub hyps: Vec<String>,
    pub refs: Vec<Vec<String>>,
    pub hyp_tokens: Vec<Vec<String>>,
    pub ref_tokens: Vec<Vec<Vec<String>>>,
    pub score: f64,
}

#[derive(Deserialize)]
pub struct ChrfCase {
    pub hyp: String,
    pub refs: Vec<String>,
    pub score: f64,
}

#[derive(Deserialize)]
pub struct ChrfDocCase {
    pub hyps: Vec<String>,
    pub refs: Vec<Vec<String>>,
    pub score: f64,
}

#[derive(Deserialize)]
pub struct TokCase {
    pub input: String,
    pub tokens: Vec<String>,
}

#[derive(Deserialize)]
pub struct Frozen {
    pub bleu_signature: String,
    pub bleu: Vec<BleuCase>,
    pub chrf: Vec<ChrfCase>,
    pub chrf_documents: Vec<ChrfDocCase>,
    pub tokenizer: Vec<TokCase>,
}

/// Values produced by the reference Python implementation.
pub fn frozen() -> Frozen {
    let text = std::fs::read_to_string(fixtures().join("sacrebleu.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn windows<T: Clone>(xs: &[T], n: usize) -> Vec<Vec<T>> {
    if xs.len() < n {
        return Vec::new();
    }
    (0..=xs.len() - n).map(|i| xs[i..i + n].to_vec()).collect()
}

fn occurrences<T: PartialEq>(xs: &[T], x: &T) -> usize {
    xs.iter().filter(|y| *y == x).count()
}

/// Corpus BLEU from pre-tokenized text by brute-force n-gram counting,
/// following the percent-scale formulation with exponential smoothing.
pub fn bleu_oracle(hyp_tokens: &[Vec<String>], ref_streams: &[Vec<Vec<String>>]) -> f64 {
    let mut correct = [0usize; 4];
    let mut total = [0usize; 4];
    let (mut c, mut r) = (0usize, 0usize);
    for (i, hyp) in hyp_tokens.iter().enumerate() {
        let refs: Vec<&Vec<String>> = ref_streams.iter().map(|s| &s[i]).collect();
        c += hyp.len();
        let mut best = refs[0].len();
        for rf in &refs {
            let (d, bd) = (rf.len().abs_diff(hyp.len()), best.abs_diff(hyp.len()));
            if d < bd || (d == bd && rf.len() < best) {
                best = rf.len();
            }
        }
        r += best;
        for n in 1..=4 {
            let h = windows(hyp, n);
            total[n - 1] += h.len();
            let mut seen: Vec<Vec<String>> = Vec::new();
            for g in &h {
                if seen.contains(g) {
                    continue;
                }
                seen.push(g.clone());
                let max_ref = refs
                    .iter()
                    .map(|rf| occurrences(&windows(rf, n), g))
                    .max()
                    .unwrap();
                correct[n - 1] += occurrences(&h, g).min(max_ref);
            }
        }
    }
    if correct.iter().all(|&x| x == 0) {
        return 0.0;
    }
    let bp = if c < r {
        if c == 0 {
            0.0
        } else {
            (1.0 - r as f64 / c as f64).exp()
        }
    } else {
        1.0
    };
    let mut precisions = [0.0f64; 4];
    let mut smooth = 1.0;
    for n in 0..4 {
        if total[n] == 0 {
            break;
        }
        if correct[n] == 0 {
            smooth *= 2.0;
            precisions[n] = 100.0 / (smooth * total[n] as f64);
        } else {
            precisions[n] = 100.0 * correct[n] as f64 / total[n] as f64;
        }
    }
    let log = |p: f64| if p == 0.0 { -9_999_999_999.0 } else { p.ln() };
    bp * (precisions.iter().map(|&p| log(p)).sum::<f64>() / 4.0).exp()
}

fn char_stats(hyp: &str, rf: &str) -> Vec<[usize; 3]> {
    let h: Vec<char> = hyp.chars().filter(|c| !c.is_whitespace()).collect();
    let r: Vec<char> = rf.chars().filter(|c| !c.is_whitespace()).collect();
    (1..=6)
        .map(|n| {
            let hg = windows(&h, n);
            let rg = windows(&r, n);
            let mut matched = 0;
            let mut seen: Vec<Vec<char>> = Vec::new();
            for g in &hg {
                if !seen.contains(g) {
                    seen.push(g.clone());
                    matched += occurrences(&hg, g).min(occurrences(&rg, g));
                }
            }
            let hyp_count = if rg.is_empty() { 0 } else { hg.len() };
            [hyp_count, rg.len(), matched]
        })
        .collect()
}

fn chrf_f(stats: &[[usize; 3]]) -> f64 {
    let beta2 = 4.0;
    let (mut p, mut r, mut k) = (0.0, 0.0, 0usize);
    for s in stats {
        if s[0] > 0 && s[1] > 0 {
            p += s[2] as f64 / s[0] as f64;
            r += s[2] as f64 / s[1] as f64;
            k += 1;
        }
    }
    if k == 0 {
        return 0.0;
    }
    let (p, r) = (p / k as f64, r / k as f64);
    if p + r == 0.0 {
        0.0
    } else {
        100.0 * (1.0 + beta2) * p * r / (beta2 * p + r)
    }
}

/// Document chrF with character orders 1..=6 and beta 2; best reference per
/// segment, statistics summed over segments.
pub fn chrf_oracle(hyps: &[String], ref_streams: &[Vec<String>]) -> f64 {
    let mut sum = vec![[0usize; 3]; 6];
    for (i, h) in hyps.iter().enumerate() {
        let mut best: Option<(f64, Vec<[usize; 3]>)> = None;
        for s in ref_streams {
            let st = char_stats(h, &s[i]);
            let f = chrf_f(&st);
            if best.as_ref().is_none_or(|(bf, _)| f > *bf) {
                best = Some((f, st));
            }
        }
        for (acc, s) in sum.iter_mut().zip(best.unwrap().1) {
            for j in 0..3 {
                acc[j] += s[j];
            }
        }
    }
    chrf_f(&sum)
}

/// Word-level Levenshtein distance, plain two-row DP.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut cur = vec![i + 1; b.len() + 1];
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = (prev[j] + usize::from(x != y)).min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

/// Minimum total edit distance over every contiguous partition of `hyp`
/// into `refs.len()` (possibly empty) spans, with the lexicographically
/// smallest offsets achieving it.
pub fn mwer_brute<T: PartialEq>(hyp: &[T], refs: &[Vec<T>]) -> (usize, Vec<usize>) {
    let k = refs.len();
    let mut best: Option<(usize, Vec<usize>)> = None;
    let mut cuts = vec![0usize; k - 1];
    loop {
        let mut offsets = vec![0];
        offsets.extend(&cuts);
        offsets.push(hyp.len());
        let cost: usize = (0..k)
            .map(|i| levenshtein(&hyp[offsets[i]..offsets[i + 1]], &refs[i]))
            .sum();
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, offsets));
        }
        // next nondecreasing cut vector in lexicographic order
        let mut i = k - 1;
        loop {
            if i == 0 {
                return best.unwrap();
            }
            i -= 1;
            if cuts[i] < hyp.len() {
                cuts[i] += 1;
                for j in i + 1..k - 1 {
                    cuts[j] = cuts[i];
                }
                break;
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(&f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Two-tailed Student-t tail probability by quadrature of the unnormalised
/// density; the normalising constant is integrated too.
pub fn t_two_tailed_numeric(t: f64, df: f64) -> f64 {
    let kernel = |x: f64| (1.0 + x * x / df).powf(-(df + 1.0) / 2.0);
    // x = u / (1 - u) maps [0, 1) onto [0, inf)
    let mapped = |u: f64| {
        if u >= 1.0 {
            return 0.0;
        }
        let x = u / (1.0 - u);
        kernel(x) / ((1.0 - u) * (1.0 - u))
    };
    let t = t.abs();
    let u0 = t / (1.0 + t);
    // split at several points so the quadrature sees the peak
    let split = |a: f64, b: f64| -> f64 {
        let pts = 16;
        (0..pts)
            .map(|i| {
                let lo = a + (b - a) * i as f64 / pts as f64;
                let hi = a + (b - a) * (i + 1) as f64 / pts as f64;
                integrate(mapped, lo, hi, 1e-15)
            })
            .sum()
    };
    let tail = split(u0, 1.0);
    let head = split(0.0, u0);
    tail / (head + tail)
}

/// Plain two-pass Pearson correlation.
pub fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}
