use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    detokenize, strip_terminal_eos, CandidateKey, CandidateOutput, CandidateSegment, CaptionEvent,
    Corpus, Document, Latency, ReferenceSet, SourceSegment, Subset,
};
use crate::error::{Error, Result};
use crate::jsonl::read_records;
use crate::ratings::{RatingLog, RatingSession};

/// Input file locations and per-system preprocessing switches.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusPaths {
    pub documents: PathBuf,
    pub candidates: PathBuf,
    pub ref_translation: PathBuf,
    #[serde(default)]
    pub ref_interpreting: Option<PathBuf>,
    #[serde(default)]
    pub ratings: Option<PathBuf>,
    /// Systems whose outputs are whitespace-tokenized and must be detokenized.
    #[serde(default)]
    pub detokenize: BTreeSet<String>,
    #[serde(default = "default_language")]
    pub target_language: String,
}

fn default_language() -> String {
    "de".to_string()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DocumentRecord {
    doc_id: String,
    subset: Subset,
    index: usize,
    text: String,
    start_ms: u64,
    end_ms: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CandidateRecord {
    system: String,
    latency: Latency,
    doc_id: String,
    index: usize,
    text: String,
    #[serde(default)]
    events: Option<Vec<CaptionEvent>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TranslationRecord {
    doc_id: String,
    index: usize,
    text: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InterpretingRecord {
    doc_id: String,
    chunk: usize,
    text: String,
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Checks that `indices` (sorted) are exactly `0..n`.
fn check_contiguous(indices: &[(usize, usize)], path: &Path, what: &str) -> Result<()> {
    for (expected, &(index, line)) in indices.iter().enumerate() {
        if index != expected {
            let message = if index < expected {
                format!("duplicate {what} index {index}")
            } else {
                format!("{what} index {index} found where {expected} was expected")
            };
            return Err(parse_err(path, line, message));
        }
    }
    Ok(())
}

fn load_documents(path: &Path) -> Result<BTreeMap<String, Document>> {
    let mut grouped: BTreeMap<String, (Subset, Vec<(usize, SourceSegment)>)> = BTreeMap::new();
    for (line, r) in read_records::<DocumentRecord>(path)? {
        if r.start_ms > r.end_ms {
            return Err(parse_err(path, line, "start_ms exceeds end_ms"));
        }
        if r.text.trim().is_empty() {
            return Err(parse_err(path, line, "empty source segment text"));
        }
        let entry = grouped
            .entry(r.doc_id.clone())
            .or_insert_with(|| (r.subset, Vec::new()));
        if entry.0 != r.subset {
            return Err(parse_err(
                path,
                line,
                format!("document `{}` listed under two subsets", r.doc_id),
            ));
        }
        entry.1.push((
            line,
            SourceSegment {
                index: r.index,
                text: r.text,
                start_ms: r.start_ms,
                end_ms: r.end_ms,
            },
        ));
    }
    let mut docs = BTreeMap::new();
    for (doc_id, (subset, mut segs)) in grouped {
        segs.sort_by_key(|(_, s)| s.index);
        let idx: Vec<_> = segs.iter().map(|(l, s)| (s.index, *l)).collect();
        check_contiguous(&idx, path, "segment")?;
        let segments = segs.into_iter().map(|(_, s)| s).collect();
        docs.insert(
            doc_id.clone(),
            Document {
                doc_id,
                subset,
                segments,
            },
        );
    }
    Ok(docs)
}

fn load_candidates(
    path: &Path,
    docs: &BTreeMap<String, Document>,
    detok: &BTreeSet<String>,
    lang: &str,
) -> Result<BTreeMap<CandidateKey, CandidateOutput>> {
    let mut grouped: BTreeMap<CandidateKey, Vec<(usize, CandidateSegment)>> = BTreeMap::new();
    for (line, r) in read_records::<CandidateRecord>(path)? {
        if !docs.contains_key(&r.doc_id) {
            return Err(parse_err(
                path,
                line,
                format!("unknown doc_id `{}`", r.doc_id),
            ));
        }
        if let Some(events) = &r.events {
            if events.windows(2).any(|w| w[0].t_ms > w[1].t_ms) {
                return Err(parse_err(path, line, "caption event times decrease"));
            }
        }
        let mut text = r.text;
        if detok.contains(&r.system) {
            text = detokenize(&text, lang);
        }
        let text = strip_terminal_eos(&text);
        let key = CandidateKey::new(r.doc_id, r.system, r.latency);
        grouped.entry(key).or_default().push((
            line,
            CandidateSegment {
                index: r.index,
                text,
                events: r.events,
            },
        ));
    }

    let mut out = BTreeMap::new();
    for (key, mut segs) in grouped {
        segs.sort_by_key(|(_, s)| s.index);
        let idx: Vec<_> = segs.iter().map(|(l, s)| (s.index, *l)).collect();
        for w in idx.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(parse_err(
                    path,
                    w[1].1,
                    format!("duplicate candidate ({key}) segment {}", w[1].0),
                ));
            }
        }
        check_contiguous(&idx, path, "candidate segment")?;
        let expected = docs[&key.doc_id].segments.len();
        if segs.len() != expected {
            let line = segs.last().map(|(l, _)| *l).unwrap_or(0);
            return Err(parse_err(
                path,
                line,
                format!(
                    "candidate ({key}) has {} segments, document has {expected}",
                    segs.len()
                ),
            ));
        }
        let segments = segs.into_iter().map(|(_, s)| s).collect();
        out.insert(key.clone(), CandidateOutput { key, segments });
    }
    Ok(out)
}

fn load_translation(
    path: &Path,
    docs: &BTreeMap<String, Document>,
) -> Result<BTreeMap<String, Vec<String>>> {
    let mut grouped: BTreeMap<String, Vec<(usize, usize, String)>> = BTreeMap::new();
    for (line, r) in read_records::<TranslationRecord>(path)? {
        if !docs.contains_key(&r.doc_id) {
            return Err(parse_err(
                path,
                line,
                format!("unknown doc_id `{}`", r.doc_id),
            ));
        }
        grouped
            .entry(r.doc_id)
            .or_default()
            .push((r.index, line, r.text));
    }
    let mut out = BTreeMap::new();
    for (doc_id, mut rows) in grouped {
        rows.sort_by_key(|r| r.0);
        let idx: Vec<_> = rows.iter().map(|r| (r.0, r.1)).collect();
        check_contiguous(&idx, path, "reference")?;
        let expected = docs[&doc_id].segments.len();
        if rows.len() != expected {
            return Err(parse_err(
                path,
                rows.last().map(|r| r.1).unwrap_or(0),
                format!(
                    "translation of `{doc_id}` has {} sentences, document has {expected}",
                    rows.len()
                ),
            ));
        }
        out.insert(doc_id, rows.into_iter().map(|r| r.2).collect());
    }
    Ok(out)
}

fn load_interpreting(
    path: &Path,
    docs: &BTreeMap<String, Document>,
) -> Result<BTreeMap<String, Vec<String>>> {
    let mut grouped: BTreeMap<String, Vec<(usize, usize, String)>> = BTreeMap::new();
    for (line, r) in read_records::<InterpretingRecord>(path)? {
        if !docs.contains_key(&r.doc_id) {
            return Err(parse_err(
                path,
                line,
                format!("unknown doc_id `{}`", r.doc_id),
            ));
        }
        grouped
            .entry(r.doc_id)
            .or_default()
            .push((r.chunk, line, r.text));
    }
    let mut out = BTreeMap::new();
    for (doc_id, mut rows) in grouped {
        rows.sort_by_key(|r| r.0);
        let idx: Vec<_> = rows.iter().map(|r| (r.0, r.1)).collect();
        check_contiguous(&idx, path, "interpreting chunk")?;
        out.insert(doc_id, rows.into_iter().map(|r| r.2).collect());
    }
    Ok(out)
}

fn load_sessions(path: &Path, docs: &BTreeMap<String, Document>) -> Result<Vec<RatingSession>> {
    let mut sessions = Vec::new();
    for (line, log) in read_records::<RatingLog>(path)? {
        if !docs.contains_key(&log.doc_id) {
            return Err(parse_err(
                path,
                line,
                format!("unknown doc_id `{}`", log.doc_id),
            ));
        }
        let session = RatingSession::from_log(log).map_err(|e| parse_err(path, line, e.to_string()))?;
        sessions.push(session);
    }
    Ok(sessions)
}

/// Reads and cross-checks every input file.
///
/// Candidate texts are detokenized (for systems listed in
/// [`CorpusPaths::detokenize`]) and then stripped of a terminal `</s>`.
pub fn load_corpus(paths: &CorpusPaths) -> Result<Corpus> {
    let documents = load_documents(&paths.documents)?;
    let candidates = load_candidates(
        &paths.candidates,
        &documents,
        &paths.detokenize,
        &paths.target_language,
    )?;
    let translation = load_translation(&paths.ref_translation, &documents)?;
    let interpreting = match &paths.ref_interpreting {
        Some(p) => load_interpreting(p, &documents)?,
        None => BTreeMap::new(),
    };
    let sessions = match &paths.ratings {
        Some(p) => load_sessions(p, &documents)?,
        None => Vec::new(),
    };
    for key in candidates.keys() {
        if !translation.contains_key(&key.doc_id) {
            return Err(Error::Invalid(format!(
                "{}: no translation reference for document `{}`",
                paths.ref_translation.display(),
                key.doc_id
            )));
        }
    }
    let unknown: BTreeSet<_> = sessions
        .iter()
        .map(|s| s.key())
        .filter(|k| !candidates.contains_key(k))
        .collect();
    for k in unknown {
        log::warn!("rating sessions for ({k}) have no matching candidate output");
    }
    Ok(Corpus {
        documents,
        candidates,
        references: ReferenceSet {
            translation,
            interpreting,
        },
        sessions,
    })
}
