use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use crmeta::metrics::{bleu_document, chrf_document};
use crmeta::mwer_resegment;
use crmeta::stats::{dependent_correlation_test, pearson, significance_clusters, DependentTest};
use crmeta_bench::{document, p_matrix, resegmentation, score_columns};

fn bench_mwer(c: &mut Criterion) {
    let mut g = c.benchmark_group("mwer_resegment");
    for segments in [5, 20, 80] {
        let (hyp, refs) = resegmentation(1, segments);
        let slices: Vec<&[&str]> = refs.iter().map(Vec::as_slice).collect();
        g.bench_with_input(BenchmarkId::from_parameter(segments), &segments, |b, _| {
            b.iter(|| mwer_resegment(black_box(&hyp), black_box(&slices)).unwrap())
        });
    }
    g.finish();
}

fn bench_lexical(c: &mut Criterion) {
    let mut g = c.benchmark_group("lexical");
    for segments in [10, 100] {
        let d = document(2, segments);
        let refs = vec![d.refs.clone()];
        g.bench_with_input(BenchmarkId::new("bleu_document", segments), &segments, |b, _| {
            b.iter(|| bleu_document(black_box(&d.hyps), black_box(&refs)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("chrf_document", segments), &segments, |b, _| {
            b.iter(|| chrf_document(black_box(&d.hyps), black_box(&refs)).unwrap())
        });
    }
    g.finish();
}

fn bench_stats(c: &mut Criterion) {
    let (human, cols) = score_columns(3, 2, 500);
    c.bench_function("pearson/500", |b| {
        b.iter(|| pearson(black_box(&human), black_box(&cols[0])).unwrap())
    });
    c.bench_function("williams_t", |b| {
        b.iter(|| {
            dependent_correlation_test(black_box(0.8), black_box(0.7), black_box(0.85), 72, DependentTest::WilliamsT)
                .unwrap()
        })
    });
    let p = p_matrix(4, 23);
    c.bench_function("significance_clusters/23", |b| {
        b.iter(|| significance_clusters(black_box(&p), 0.05))
    });
}

criterion_group!(benches, bench_mwer, bench_lexical, bench_stats);
criterion_main!(benches);
