//! Meta-evaluation of simultaneous speech translation metrics against
//! continuous human ratings.

pub mod alignment;
pub mod analysis;
pub mod config;
pub mod corpus;
pub mod error;
pub mod jsonl;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod session;
pub mod ratings;
pub mod stats;

pub use error::{Error, Result};

pub use alignment::{mwer_resegment, Segmentation};
pub use analysis::{AnalysisConfig, Aggregation, SubsetSelection};
pub use config::Config;
pub use corpus::{CandidateKey, Corpus, Latency, Subset};
pub use metrics::{Metric, MetricVariant, ScoreRecord};
pub use ratings::{CrDefinition, RatingLog, RatingSession};
pub use session::{SessionPackage, SessionService};
