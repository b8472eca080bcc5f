//! Bridge to out-of-process segment scorers (COMET, BertScore, ...).
//!
//! Protocol: one JSON object `{id, src?, hyp, ref}` per line on the scorer's
//! stdin; one `{id, score}` per line expected on its stdout. Anything else
//! the scorer wants to say goes to stderr.

use std::collections::{HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub src: Option<String>,
    pub hyp: String,
    #[serde(rename = "ref")]
    pub reference: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub id: String,
    pub score: f64,
}

pub trait SegmentScorer: Send + Sync {
    /// Stable description of the scorer; part of every cache key.
    fn identity(&self) -> String;

    /// Whether each request must carry the source segment.
    fn requires_source(&self) -> bool {
        false
    }

    /// Scores a non-empty batch. May return results in any order.
    fn score_batch(&self, batch: &[ScoreRequest]) -> Result<Vec<ScoreResponse>>;
}

/// Runs a shell command speaking the line protocol.
#[derive(Debug, Clone)]
pub struct CommandScorer {
    pub name: String,
    pub command: String,
    pub requires_source: bool,
}

impl CommandScorer {
    pub fn new(name: impl Into<String>, command: impl Into<String>, requires_source: bool) -> Self {
        CommandScorer {
            name: name.into(),
            command: command.into(),
            requires_source,
        }
    }
}

impl SegmentScorer for CommandScorer {
    fn identity(&self) -> String {
        format!("{}={}", self.name, self.command)
    }

    fn requires_source(&self) -> bool {
        self.requires_source
    }

    fn score_batch(&self, batch: &[ScoreRequest]) -> Result<Vec<ScoreResponse>> {
        let fail = |message: String| Error::Scorer {
            scorer: self.name.clone(),
            message,
        };
        let mut input = Vec::new();
        for r in batch {
            serde_json::to_writer(&mut input, r).map_err(|e| fail(e.to_string()))?;
            input.push(b'\n');
        }
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| fail(format!("cannot start `{}`: {e}", self.command)))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let writer = std::thread::spawn(move || {
            // a scorer that exits early closes the pipe; its exit status reports the failure
            let _ = stdin.write_all(&input);
        });
        let output = child
            .wait_with_output()
            .map_err(|e| fail(e.to_string()))?;
        let _ = writer.join();
        if !output.status.success() {
            return Err(fail(format!("exited with {}", output.status)));
        }
        let mut out = Vec::with_capacity(batch.len());
        for (i, line) in output.stdout.split(|&b| b == b'\n').enumerate() {
            if line.iter().all(u8::is_ascii_whitespace) {
                continue;
            }
            let resp: ScoreResponse = serde_json::from_slice(line)
                .map_err(|e| fail(format!("stdout line {}: {e}", i + 1)))?;
            out.push(resp);
        }
        Ok(out)
    }
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    key: String,
    score: f64,
}

/// Persistent score cache: an append-only JSONL file plus an in-memory map.
/// Lines that fail to parse are ignored, so their records get recomputed.
#[derive(Debug)]
pub struct ScoreCache {
    path: Option<PathBuf>,
    map: RwLock<HashMap<String, f64>>,
    writer: Mutex<Option<File>>,
}

impl ScoreCache {
    pub fn in_memory() -> Self {
        ScoreCache {
            path: None,
            map: RwLock::new(HashMap::new()),
            writer: Mutex::new(None),
        }
    }

    pub fn open(path: &Path) -> Result<Self> {
        let mut map = HashMap::new();
        if path.exists() {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            for line in BufReader::new(file).lines() {
                let Ok(line) = line else { break };
                match serde_json::from_str::<CacheEntry>(&line) {
                    Ok(e) if e.score.is_finite() => {
                        map.insert(e.key, e.score);
                    }
                    _ => log::warn!("{}: ignoring corrupt cache line", path.display()),
                }
            }
        }
        Ok(ScoreCache {
            path: Some(path.to_path_buf()),
            map: RwLock::new(map),
            writer: Mutex::new(None),
        })
    }

    pub fn len(&self) -> usize {
        self.map.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, key: &str) -> Option<f64> {
        self.map.read().unwrap().get(key).copied()
    }

    fn insert_all(&self, entries: &[(String, f64)]) -> Result<()> {
        if let Some(path) = &self.path {
            let mut guard = self.writer.lock().unwrap();
            if guard.is_none() {
                if let Some(dir) = path.parent() {
                    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                }
                let f = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .map_err(|e| Error::io(path, e))?;
                *guard = Some(f);
            }
            let file = guard.as_mut().unwrap();
            let mut buf = Vec::new();
            for (key, score) in entries {
                serde_json::to_writer(
                    &mut buf,
                    &CacheEntry {
                        key: key.clone(),
                        score: *score,
                    },
                )
                .map_err(|e| Error::Invalid(e.to_string()))?;
                buf.push(b'\n');
            }
            file.write_all(&buf).map_err(|e| Error::io(path, e))?;
            file.flush().map_err(|e| Error::io(path, e))?;
        }
        let mut map = self.map.write().unwrap();
        for (k, v) in entries {
            map.insert(k.clone(), *v);
        }
        Ok(())
    }
}

/// Content hash of `(scorer identity, record)`; the request id is excluded.
pub fn cache_key(identity: &str, r: &ScoreRequest) -> String {
    let mut h = Sha256::new();
    for part in [
        identity,
        r.src.as_deref().unwrap_or("\u{0}none"),
        r.hyp.as_str(),
        r.reference.as_str(),
    ] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    hex::encode(h.finalize())
}

/// Scores `batch` through `scorer`, serving what it can from `cache`.
/// Results come back in input order. Uncached records with identical content
/// are sent to the scorer once.
pub fn external_score(
    scorer: &dyn SegmentScorer,
    cache: &ScoreCache,
    batch: &[ScoreRequest],
) -> Result<Vec<ScoreResponse>> {
    let identity = scorer.identity();
    if scorer.requires_source() {
        if let Some(r) = batch.iter().find(|r| r.src.is_none()) {
            return Err(Error::Scorer {
                scorer: identity,
                message: format!("record `{}` lacks the source segment", r.id),
            });
        }
    }
    let mut seen_ids = HashSet::new();
    if let Some(r) = batch.iter().find(|r| !seen_ids.insert(r.id.as_str())) {
        return Err(Error::Invalid(format!("duplicate score request id `{}`", r.id)));
    }

    let keys: Vec<String> = batch.iter().map(|r| cache_key(&identity, r)).collect();
    let mut pending: Vec<ScoreRequest> = Vec::new();
    let mut pending_keys = HashSet::new();
    for (r, k) in batch.iter().zip(&keys) {
        if cache.get(k).is_none() && pending_keys.insert(k.clone()) {
            pending.push(ScoreRequest {
                id: k.clone(),
                ..r.clone()
            });
        }
    }

    if !pending.is_empty() {
        log::info!("{identity}: scoring {} uncached records", pending.len());
        let responses = scorer.score_batch(&pending)?;
        let mut got: HashMap<String, f64> = HashMap::with_capacity(responses.len());
        for resp in responses {
            if !resp.score.is_finite() {
                return Err(Error::Scorer {
                    scorer: identity,
                    message: format!("non-finite score for `{}`", resp.id),
                });
            }
            got.insert(resp.id, resp.score);
        }
        let missing: Vec<String> = batch
            .iter()
            .zip(&keys)
            .filter(|(_, k)| pending_keys.contains(*k) && !got.contains_key(*k))
            .map(|(r, _)| r.id.clone())
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingScores {
                scorer: identity,
                missing,
            });
        }
        let entries: Vec<(String, f64)> = pending
            .iter()
            .map(|r| (r.id.clone(), got[&r.id]))
            .collect();
        cache.insert_all(&entries)?;
    }

    Ok(batch
        .iter()
        .zip(&keys)
        .map(|(r, k)| ScoreResponse {
            id: r.id.clone(),
            score: cache.get(k).expect("score present after scoring"),
        })
        .collect())
}
