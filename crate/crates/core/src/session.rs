//! Rating-session service state: assignments, caption packages, the
//! one-pass rule and durable click-log storage.
//!
//! Everything lives in a state directory of append-only files, so a restarted
//! service sees every earlier fetch and submission.

use std::collections::{BTreeSet, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::corpus::{CandidateKey, CaptionEvent, Corpus, Latency};
use crate::error::{Error, Result};
use crate::jsonl::{append_record, read_complete_records, repair_tail, write_records};
use crate::ratings::{RatingLog, RatingSession};

pub const STATE_FILE: &str = "state.json";
pub const ASSIGNMENTS_FILE: &str = "assignments.jsonl";
pub const FETCHES_FILE: &str = "fetches.jsonl";
pub const RATINGS_FILE: &str = "ratings.jsonl";

/// Everything the rating UI needs to replay one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionPackage {
    pub evaluator: String,
    pub doc_id: String,
    pub system: String,
    pub latency: Latency,
    pub candidate_id: String,
    pub events: Vec<CaptionEvent>,
    pub duration_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub media_url: Option<String>,
}

/// Caption timing for a candidate.
///
/// Timed candidates are shifted so the first caption appears at 0. Untimed
/// candidates show each segment at its source segment's end time.
pub fn build_package(corpus: &Corpus, key: &CandidateKey, evaluator: &str) -> Result<SessionPackage> {
    let doc = corpus
        .document(&key.doc_id)
        .ok_or_else(|| Error::Invalid(format!("unknown document `{}`", key.doc_id)))?;
    let cand = corpus
        .candidates
        .get(key)
        .ok_or_else(|| Error::Invalid(format!("unknown candidate `{key}`")))?;
    let timed: Vec<&CaptionEvent> = cand
        .segments
        .iter()
        .filter_map(|s| s.events.as_ref())
        .flatten()
        .collect();
    let doc_end = doc.duration_ms();
    let (events, duration_ms) = if timed.is_empty() {
        let events: Vec<CaptionEvent> = cand
            .segments
            .iter()
            .zip(&doc.segments)
            .map(|(c, s)| CaptionEvent {
                t_ms: s.end_ms,
                text: c.text.clone(),
            })
            .collect();
        let last = events.last().map_or(0, |e| e.t_ms);
        (events, doc_end.max(last))
    } else {
        let mut events: Vec<CaptionEvent> = timed.into_iter().cloned().collect();
        events.sort_by_key(|e| e.t_ms);
        let offset = events[0].t_ms;
        for e in &mut events {
            e.t_ms -= offset;
        }
        let last = events.last().map_or(0, |e| e.t_ms);
        (events, doc_end.saturating_sub(offset).max(last))
    };
    Ok(SessionPackage {
        evaluator: evaluator.to_string(),
        doc_id: key.doc_id.clone(),
        system: key.system.clone(),
        latency: key.latency,
        candidate_id: key.to_string(),
        events,
        duration_ms,
        media_url: None,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub evaluator: String,
    pub doc_id: String,
    pub system: String,
    pub latency: Latency,
}

impl Assignment {
    pub fn key(&self) -> CandidateKey {
        CandidateKey::new(&self.doc_id, &self.system, self.latency)
    }
}

/// Round-robin assignment over a seeded shuffle of the candidates.
///
/// Each candidate goes to up to `per_candidate` evaluators, and no evaluator
/// receives two candidates of the same document.
pub fn assign_round_robin(
    corpus: &Corpus,
    evaluators: &[String],
    per_candidate: usize,
    seed: u64,
) -> Vec<Assignment> {
    let mut keys: Vec<&CandidateKey> = corpus.candidates.keys().collect();
    keys.shuffle(&mut StdRng::seed_from_u64(seed));
    let mut seen: HashSet<(usize, &str)> = HashSet::new();
    let mut cursor = 0;
    let mut out = Vec::new();
    for key in keys {
        for _ in 0..per_candidate {
            let pick = (0..evaluators.len())
                .map(|o| (cursor + o) % evaluators.len())
                .find(|e| !seen.contains(&(*e, key.doc_id.as_str())));
            let Some(e) = pick else {
                log::warn!("{key}: not enough evaluators for {per_candidate} ratings");
                break;
            };
            seen.insert((e, key.doc_id.as_str()));
            cursor = (e + 1) % evaluators.len();
            out.push(Assignment {
                evaluator: evaluators[e].clone(),
                doc_id: key.doc_id.clone(),
                system: key.system.clone(),
                latency: key.latency,
            });
        }
    }
    out.sort();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServeConfig {
    pub evaluators: Vec<String>,
    #[serde(default = "default_per_candidate")]
    pub per_candidate: usize,
    /// Drawn at random and recorded on first start when unset.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_per_candidate() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PersistedState {
    seed: u64,
    evaluators: Vec<String>,
    per_candidate: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FetchRecord {
    evaluator: String,
    doc_id: String,
}

struct State {
    fetched: HashSet<(String, String)>,
    submitted: HashSet<(String, String)>,
}

pub struct SessionService {
    corpus: Corpus,
    state_dir: PathBuf,
    seed: u64,
    assignments: Vec<Assignment>,
    state: Mutex<State>,
}

impl SessionService {
    /// Opens or initialises the state directory. Assignments made on first
    /// start are reused afterwards, even if the configuration changes.
    pub fn open(corpus: Corpus, state_dir: &Path, config: &ServeConfig) -> Result<Self> {
        std::fs::create_dir_all(state_dir).map_err(|e| Error::io(state_dir, e))?;
        let state_path = state_dir.join(STATE_FILE);
        let assignments_path = state_dir.join(ASSIGNMENTS_FILE);
        let persisted = match std::fs::read_to_string(&state_path) {
            Ok(s) => serde_json::from_str::<PersistedState>(&s).map_err(|e| Error::Parse {
                path: state_path.clone(),
                line: e.line(),
                message: e.to_string(),
            })?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                if config.evaluators.is_empty() {
                    return Err(Error::Invalid("serve needs at least one evaluator".into()));
                }
                let seed = config.seed.unwrap_or_else(rand::random);
                let st = PersistedState {
                    seed,
                    evaluators: config.evaluators.clone(),
                    per_candidate: config.per_candidate,
                };
                let a = assign_round_robin(&corpus, &st.evaluators, st.per_candidate, seed);
                write_records(&assignments_path, &a)?;
                let body = serde_json::to_string_pretty(&st)
                    .map_err(|e| Error::Invalid(e.to_string()))?;
                crate::report::write_file(&state_path, &body)?;
                log::info!("assigned {} sessions with seed {seed}", a.len());
                st
            }
            Err(e) => return Err(Error::io(&state_path, e)),
        };
        let assignments: Vec<Assignment> = read_complete_records(&assignments_path)?;
        let fetches_path = state_dir.join(FETCHES_FILE);
        let ratings_path = state_dir.join(RATINGS_FILE);
        repair_tail(&fetches_path)?;
        repair_tail(&ratings_path)?;
        let fetched = read_complete_records::<FetchRecord>(&fetches_path)?
            .into_iter()
            .map(|f| (f.evaluator, f.doc_id))
            .collect();
        let submitted = read_complete_records::<RatingLog>(&ratings_path)?
            .into_iter()
            .map(|l| (l.evaluator, l.doc_id))
            .collect();
        Ok(SessionService {
            corpus,
            state_dir: state_dir.to_path_buf(),
            seed: persisted.seed,
            assignments,
            state: Mutex::new(State { fetched, submitted }),
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn assignments(&self) -> &[Assignment] {
        &self.assignments
    }

    pub fn ratings_path(&self) -> PathBuf {
        self.state_dir.join(RATINGS_FILE)
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn assignment(&self, evaluator: &str, doc_id: &str) -> Result<&Assignment> {
        self.assignments
            .iter()
            .find(|a| a.evaluator == evaluator && a.doc_id == doc_id)
            .ok_or_else(|| Error::NotAssigned {
                evaluator: evaluator.to_string(),
                doc_id: doc_id.to_string(),
            })
    }

    /// Assignments not yet fetched by the evaluator.
    pub fn pending(&self, evaluator: &str) -> Vec<Assignment> {
        let st = self.lock();
        self.assignments
            .iter()
            .filter(|a| a.evaluator == evaluator)
            .filter(|a| !st.fetched.contains(&(a.evaluator.clone(), a.doc_id.clone())))
            .cloned()
            .collect()
    }

    /// Hands out a package once. The fetch is on disk before it is returned.
    pub fn fetch(&self, evaluator: &str, doc_id: &str) -> Result<SessionPackage> {
        let a = self.assignment(evaluator, doc_id)?;
        let package = build_package(&self.corpus, &a.key(), evaluator)?;
        let mut st = self.lock();
        let k = (evaluator.to_string(), doc_id.to_string());
        if st.fetched.contains(&k) {
            return Err(Error::OnePassViolation {
                evaluator: k.0,
                doc_id: k.1,
            });
        }
        append_record(
            &self.state_dir.join(FETCHES_FILE),
            &FetchRecord {
                evaluator: k.0.clone(),
                doc_id: k.1.clone(),
            },
        )?;
        st.fetched.insert(k);
        Ok(package)
    }

    /// Validates and stores a completed click log. Nothing is written for a
    /// rejected log.
    pub fn submit(&self, log: RatingLog) -> Result<RatingSession> {
        let a = self.assignment(&log.evaluator, &log.doc_id)?;
        if a.system != log.system || a.latency != log.latency {
            return Err(Error::Invalid(format!(
                "log names candidate {}/{}, assignment is {}",
                log.system,
                log.latency,
                a.key()
            )));
        }
        let package = build_package(&self.corpus, &a.key(), &log.evaluator)?;
        if log.duration_ms != package.duration_ms as i64 {
            return Err(Error::Invalid(format!(
                "duration_ms {} does not match the package ({})",
                log.duration_ms, package.duration_ms
            )));
        }
        let session = RatingSession::from_log(log.clone())?;
        let mut st = self.lock();
        let k = (log.evaluator.clone(), log.doc_id.clone());
        if !st.fetched.contains(&k) {
            return Err(Error::Invalid(format!(
                "evaluator `{}` never fetched document `{}`",
                k.0, k.1
            )));
        }
        if st.submitted.contains(&k) {
            return Err(Error::OnePassViolation {
                evaluator: k.0,
                doc_id: k.1,
            });
        }
        append_record(&self.ratings_path(), &session.to_log())?;
        st.submitted.insert(k);
        Ok(session)
    }

    /// Documents each evaluator has completed, for progress displays.
    pub fn completed(&self) -> BTreeSet<(String, String)> {
        self.lock().submitted.iter().cloned().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CandidateOutput, CandidateSegment, Document, SourceSegment, Subset};
    use crate::ratings::ClickRecord;

    fn corpus(timed: bool) -> Corpus {
        let mut c = Corpus::default();
        for doc in ["d1", "d2"] {
            c.documents.insert(
                doc.into(),
                Document {
                    doc_id: doc.into(),
                    subset: Subset::Common,
                    segments: vec![
                        SourceSegment { index: 0, text: "a".into(), start_ms: 0, end_ms: 2000 },
                        SourceSegment { index: 1, text: "b".into(), start_ms: 2000, end_ms: 5000 },
                    ],
                },
            );
            for sys in ["A", "B"] {
                let key = CandidateKey::new(doc, sys, Latency::Low);
                let ev = |t: u64, s: &str| timed.then(|| vec![CaptionEvent { t_ms: t, text: s.into() }]);
                c.candidates.insert(
                    key.clone(),
                    CandidateOutput {
                        key,
                        segments: vec![
                            CandidateSegment { index: 0, text: "x".into(), events: ev(1500, "x") },
                            CandidateSegment { index: 1, text: "y".into(), events: ev(3500, "y") },
                        ],
                    },
                );
            }
        }
        c
    }

    #[test]
    fn packages_drop_initial_wait() {
        let c = corpus(true);
        let p = build_package(&c, &CandidateKey::new("d1", "A", Latency::Low), "e").unwrap();
        let t: Vec<u64> = p.events.iter().map(|e| e.t_ms).collect();
        assert_eq!(t, vec![0, 2000]);
        assert_eq!(p.duration_ms, 3500);
        let c = corpus(false);
        let p = build_package(&c, &CandidateKey::new("d1", "A", Latency::Low), "e").unwrap();
        let t: Vec<u64> = p.events.iter().map(|e| e.t_ms).collect();
        assert_eq!(t, vec![2000, 5000]);
        assert_eq!(p.duration_ms, 5000);
    }

    #[test]
    fn assignments_respect_one_pass_and_seed() {
        let c = corpus(false);
        let ev: Vec<String> = ["e1", "e2", "e3", "e4"].iter().map(|s| s.to_string()).collect();
        let a = assign_round_robin(&c, &ev, 2, 7);
        assert_eq!(a.len(), 8);
        // three evaluators can give each document only three ratings
        assert_eq!(assign_round_robin(&c, &ev[..3], 2, 7).len(), 6);
        let mut pairs = HashSet::new();
        for x in &a {
            assert!(pairs.insert((x.evaluator.clone(), x.doc_id.clone())));
        }
        assert_eq!(a, assign_round_robin(&c, &ev, 2, 7));
        // two evaluators, two systems per document, two ratings each: both rate every doc once
        let two = assign_round_robin(&c, &ev[..2], 2, 1);
        assert_eq!(two.len(), 4);
    }

    fn log(p: &SessionPackage, clicks: &[(i64, i64)]) -> RatingLog {
        RatingLog {
            evaluator: p.evaluator.clone(),
            doc_id: p.doc_id.clone(),
            system: p.system.clone(),
            latency: p.latency,
            duration_ms: p.duration_ms as i64,
            clicks: clicks.iter().map(|&(t_ms, value)| ClickRecord { t_ms, value }).collect(),
        }
    }

    #[test]
    fn one_pass_rule_survives_restart() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ServeConfig {
            evaluators: vec!["e1".into(), "e2".into()],
            per_candidate: 2,
            seed: Some(3),
        };
        let svc = SessionService::open(corpus(false), dir.path(), &cfg).unwrap();
        assert_eq!(svc.pending("e1").len(), 2);
        let p = svc.fetch("e1", "d1").unwrap();
        assert!(matches!(svc.fetch("e1", "d1"), Err(Error::OnePassViolation { .. })));
        assert!(matches!(svc.fetch("nobody", "d1"), Err(Error::NotAssigned { .. })));

        let late = log(&p, &[(0, 3), (p.duration_ms as i64 + 1, 4)]);
        assert!(svc.submit(late).is_err());
        assert!(read_complete_records::<RatingLog>(&svc.ratings_path()).unwrap().is_empty());

        let s = svc.submit(log(&p, &[(0, 3), (100, 4)])).unwrap();
        assert_eq!(s.clicks.len(), 2);
        assert!(svc.submit(log(&p, &[(0, 3)])).is_err());
        drop(svc);

        let other = ServeConfig { seed: Some(99), ..cfg };
        let svc = SessionService::open(corpus(false), dir.path(), &other).unwrap();
        assert_eq!(svc.seed(), 3);
        assert!(matches!(svc.fetch("e1", "d1"), Err(Error::OnePassViolation { .. })));
        assert_eq!(svc.pending("e1").len(), 1);
        let p2 = svc.fetch("e2", "d1").unwrap();
        svc.submit(log(&p2, &[(5, 1)])).unwrap();
        let stored: Vec<RatingLog> = read_complete_records(&svc.ratings_path()).unwrap();
        assert_eq!(stored.len(), 2);
        assert_eq!(stored[0].doc_id, stored[1].doc_id);
    }
}
