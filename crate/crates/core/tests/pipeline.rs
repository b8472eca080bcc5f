mod common;

use std::collections::BTreeMap;
use std::path::Path;

use crmeta::pipeline::end_to_end;
use crmeta::{Config, Error};

pub fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn config() -> Config {
    Config::load(&common::fixtures().join("corpus/run.toml")).unwrap()
}

#[test]
fn fixture_run_produces_full_tree() {
    let out = tempfile::tempdir().unwrap();
    let analysis = end_to_end(&config(), out.path()).unwrap();
    let files = tree(out.path());
    for f in [
        "corpus.json",
        "scores.jsonl",
        "ratings.jsonl",
        "sessions.jsonl",
        "analysis.json",
        "table1.md",
        "table1.jsonl",
        "cr_vs_cri.svg",
        "cr_vs_cri.json",
        "recommendations.md",
        "both/averaged/table2.md",
        "both/averaged/heatmap.svg",
        "both/averaged/heatmap.json",
        "both/averaged/pairwise.jsonl",
        "both/averaged/scatter_BLEU_transl_Sent.svg",
        "NonNative/all_ratings/correlations.jsonl",
        "Common/averaged/scatter_chrF_transl_Sent.json",
    ] {
        assert!(files.contains_key(f), "missing {f}; have {:?}", files.keys().collect::<Vec<_>>());
    }
    // without external scorers only the 12 BLEU and chrF rows are ranked
    let t = analysis.tables.iter().find(|t| t.subset.label() == "both" && t.aggregation.label() == "averaged").unwrap();
    assert_eq!(t.ranking.len(), 12);
    let all = analysis.tables.iter().find(|t| t.subset.label() == "both" && t.aggregation.label() == "all_ratings").unwrap();
    assert!(t.n < all.n);
    // Table 2 r equals a direct Pearson on the same pairs
    let pairs = crmeta::analysis::build_pairs(
        &crmeta::corpus::load_corpus(&config().corpus).unwrap(),
        &crmeta::jsonl::read_records::<crmeta::ScoreRecord>(&out.path().join("scores.jsonl"))
            .unwrap()
            .into_iter()
            .map(|(_, r)| r)
            .collect::<Vec<_>>(),
        &[t.ranking[0].metric_variant],
        crmeta::SubsetSelection::Both,
        crmeta::Aggregation::Averaged,
        crmeta::CrDefinition::Cr,
    )
    .unwrap();
    let r = common::pearson_oracle(&pairs.ratings(), &pairs.column(0));
    assert!((r - t.ranking[0].r).abs() < 1e-12);
}

#[test]
fn rerun_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    end_to_end(&config(), a.path()).unwrap();
    end_to_end(&config(), b.path()).unwrap();
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    assert_eq!(ta.keys().collect::<Vec<_>>(), tb.keys().collect::<Vec<_>>());
    for (k, v) in &ta {
        assert!(v == &tb[k], "{k} differs");
    }
}

#[test]
fn missing_reference_fails_in_ingest() {
    let mut cfg = config();
    cfg.corpus.ref_translation = "/nonexistent/ref_translation.jsonl".into();
    let out = tempfile::tempdir().unwrap();
    let err = end_to_end(&cfg, out.path()).unwrap_err();
    assert!(matches!(err, Error::Stage { stage: "ingest", .. }));
    assert!(err.to_string().starts_with("ingest: "));
    assert!(err.to_string().contains("/nonexistent/ref_translation.jsonl"));
}
