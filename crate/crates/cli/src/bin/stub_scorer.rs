//! Deterministic stand-in for a neural segment scorer, speaking the
//! line-delimited score protocol: `{id, src?, hyp, ref}` in, `{id, score}` out.
//!
//! The score is the word-type Jaccard overlap of hypothesis and reference.
//! `--log FILE` appends one line per invocation; `--require-source` fails on
//! records without `src`.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use clap::Parser;
use serde::{Deserialize, Serialize};

/// Word-overlap segment scorer for testing the external scorer bridge.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Append the number of records scored to FILE on each invocation.
    #[arg(long, value_name = "FILE")]
    log: Option<std::path::PathBuf>,
    /// Fail on records without `src`.
    #[arg(long)]
    require_source: bool,
}

#[derive(Deserialize)]
struct Request {
    id: String,
    #[serde(default)]
    src: Option<String>,
    hyp: String,
    #[serde(rename = "ref")]
    reference: String,
}

#[derive(Serialize)]
struct Response {
    id: String,
    score: f64,
}

fn jaccard(a: &str, b: &str) -> f64 {
    let a: BTreeSet<&str> = a.split_whitespace().collect();
    let b: BTreeSet<&str> = b.split_whitespace().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

fn main() -> anyhow::Result<()> {
    let Args { log, require_source } = Args::parse();
    let stdin = std::io::stdin();
    let mut out = std::io::BufWriter::new(std::io::stdout().lock());
    let mut n = 0usize;
    for line in stdin.lock().lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: Request = serde_json::from_str(&line)?;
        if require_source && r.src.is_none() {
            anyhow::bail!("record {} has no source", r.id);
        }
        let resp = Response {
            score: jaccard(&r.hyp, &r.reference),
            id: r.id,
        };
        serde_json::to_writer(&mut out, &resp)?;
        out.write_all(b"\n")?;
        n += 1;
    }
    out.flush()?;
    if let Some(path) = log {
        let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        writeln!(f, "{n}")?;
    }
    Ok(())
}
