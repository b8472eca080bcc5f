//! Documents, system outputs, references and rating logs.

mod load;
mod text;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use load::{load_corpus, CorpusPaths};
pub use text::{detokenize, strip_terminal_eos};

use crate::ratings::RatingSession;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Subset {
    Common,
    #[serde(alias = "Non-Native", alias = "non-native", alias = "nonnative")]
    NonNative,
}

impl Subset {
    pub fn label(self) -> &'static str {
        match self {
            Subset::Common => "Common",
            Subset::NonNative => "NonNative",
        }
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Latency {
    Low,
    Medium,
    High,
}

impl Latency {
    pub const ALL: [Latency; 3] = [Latency::Low, Latency::Medium, Latency::High];

    pub fn label(self) -> &'static str {
        match self {
            Latency::Low => "low",
            Latency::Medium => "medium",
            Latency::High => "high",
        }
    }
}

impl fmt::Display for Latency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSegment {
    pub index: usize,
    pub text: String,
    pub start_ms: u64,
    pub end_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub subset: Subset,
    pub segments: Vec<SourceSegment>,
}

impl Document {
    pub fn source_texts(&self) -> Vec<&str> {
        self.segments.iter().map(|s| s.text.as_str()).collect()
    }

    pub fn duration_ms(&self) -> u64 {
        self.segments.iter().map(|s| s.end_ms).max().unwrap_or(0)
    }
}

/// Identifies one system output for one document: `(doc, system, latency)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CandidateKey {
    pub doc_id: String,
    pub system: String,
    pub latency: Latency,
}

impl CandidateKey {
    pub fn new(doc_id: impl Into<String>, system: impl Into<String>, latency: Latency) -> Self {
        CandidateKey {
            doc_id: doc_id.into(),
            system: system.into(),
            latency,
        }
    }
}

impl fmt::Display for CandidateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.doc_id, self.system, self.latency)
    }
}

/// Caption update emitted by a system at `t_ms` on the document clock.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionEvent {
    pub t_ms: u64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSegment {
    pub index: usize,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<Vec<CaptionEvent>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateOutput {
    pub key: CandidateKey,
    pub segments: Vec<CandidateSegment>,
}

impl CandidateOutput {
    pub fn texts(&self) -> Vec<&str> {
        self.segments.iter().map(|s| s.text.as_str()).collect()
    }
}

/// Translation references are sentence-aligned to the source; interpreting
/// transcripts are free-form chunks.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReferenceSet {
    pub translation: BTreeMap<String, Vec<String>>,
    pub interpreting: BTreeMap<String, Vec<String>>,
}

impl ReferenceSet {
    pub fn translation(&self, doc_id: &str) -> Option<&[String]> {
        self.translation.get(doc_id).map(Vec::as_slice)
    }

    pub fn interpreting(&self, doc_id: &str) -> Option<&[String]> {
        self.interpreting.get(doc_id).map(Vec::as_slice)
    }
}

/// Cross-referenced, read-only view over all ingested data.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub documents: BTreeMap<String, Document>,
    pub candidates: BTreeMap<CandidateKey, CandidateOutput>,
    pub references: ReferenceSet,
    pub sessions: Vec<RatingSession>,
}

impl Corpus {
    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.documents.get(doc_id)
    }

    pub fn subset_of(&self, doc_id: &str) -> Option<Subset> {
        self.documents.get(doc_id).map(|d| d.subset)
    }

    pub fn systems(&self) -> Vec<&str> {
        let mut s: Vec<&str> = self.candidates.keys().map(|k| k.system.as_str()).collect();
        s.sort_unstable();
        s.dedup();
        s
    }
}
