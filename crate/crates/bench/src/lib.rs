//! Fixture generators shared by the benchmarks.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const VOCAB: &[&str] = &[
    "die", "der", "und", "ist", "nicht", "wir", "ein", "eine", "Welt", "Sprache", "heute",
    "Menschen", "sehr", "gut", "viel", "Zeit", "haben", "werden", "können", "Jahr", "Kinder",
    "Frage", "Antwort", "wichtig", "immer", ",", ".", "?",
];

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn tokens(rng: &mut StdRng, n: usize) -> Vec<&'static str> {
    (0..n).map(|_| VOCAB[rng.random_range(0..VOCAB.len())]).collect()
}

pub fn sentence(rng: &mut StdRng, min: usize, max: usize) -> String {
    let n = rng.random_range(min..=max);
    tokens(rng, n).join(" ")
}

/// Copies `src` with roughly `rate` of its tokens substituted.
pub fn perturb(rng: &mut StdRng, src: &[&'static str], rate: f64) -> Vec<&'static str> {
    src.iter()
        .map(|&t| {
            if rng.random_bool(rate) {
                VOCAB[rng.random_range(0..VOCAB.len())]
            } else {
                t
            }
        })
        .collect()
}

/// A reference document and a noisy hypothesis with the same segmentation.
pub struct DocPair {
    pub hyps: Vec<String>,
    pub refs: Vec<String>,
}

pub fn document(seed: u64, segments: usize) -> DocPair {
    let mut rng = rng(seed);
    let mut hyps = Vec::with_capacity(segments);
    let mut refs = Vec::with_capacity(segments);
    for _ in 0..segments {
        let n = rng.random_range(5..=30);
        let r = tokens(&mut rng, n);
        let h = perturb(&mut rng, &r, 0.3);
        refs.push(r.join(" "));
        hyps.push(h.join(" "));
    }
    DocPair { hyps, refs }
}

/// A reference split into `segments` pieces and an unsegmented noisy copy.
pub fn resegmentation(seed: u64, segments: usize) -> (Vec<&'static str>, Vec<Vec<&'static str>>) {
    let mut rng = rng(seed);
    let refs: Vec<Vec<&'static str>> = (0..segments)
        .map(|_| {
            let n = rng.random_range(5..=25);
            tokens(&mut rng, n)
        })
        .collect();
    let hyp = perturb(&mut rng, &refs.concat(), 0.25);
    (hyp, refs)
}

/// `k` score columns of length `n`, each correlated with a shared signal.
pub fn score_columns(seed: u64, k: usize, n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut rng = rng(seed);
    let human: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..4.0)).collect();
    let cols = (0..k)
        .map(|i| {
            let noise = 0.2 + i as f64 * 0.1;
            human.iter().map(|h| h + rng.random_range(-noise..noise) * 3.0).collect()
        })
        .collect();
    (human, cols)
}

/// A symmetric matrix of p-values with ones on the diagonal.
#[allow(clippy::needless_range_loop)]
pub fn p_matrix(seed: u64, v: usize) -> Vec<Vec<f64>> {
    let mut rng = rng(seed);
    let mut p = vec![vec![1.0; v]; v];
    for a in 0..v {
        for b in a + 1..v {
            let x: f64 = rng.random::<f64>().powi(2);
            p[a][b] = x;
            p[b][a] = x;
        }
    }
    p
}
