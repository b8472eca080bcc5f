//! TOML run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::alignment::MwerOptions;
use crate::analysis::AnalysisConfig;
use crate::corpus::CorpusPaths;
use crate::error::{Error, Result};
use crate::metrics::external::{CommandScorer, ScoreCache};
use crate::metrics::{Metric, ScoringContext};
use crate::session::ServeConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScorerConfig {
    /// Shell command speaking the line-delimited score protocol.
    pub command: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoringConfig {
    /// Persistent segment-score cache. In-memory when unset.
    #[serde(default)]
    pub cache: Option<PathBuf>,
    #[serde(default)]
    pub mwer_lowercase: bool,
    #[serde(default)]
    pub scorers: BTreeMap<Metric, ScorerConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub corpus: CorpusPaths,
    #[serde(default)]
    pub scoring: ScoringConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub serve: Option<ServeConfig>,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl Config {
    /// Reads a config file. Relative paths are taken from the file's directory.
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: Config = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e
                .span()
                .map_or(0, |s| text[..s.start].matches('\n').count() + 1),
            message: e.message().to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        config.analysis.validate()?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let c = &mut self.corpus;
        resolve(base, &mut c.documents);
        resolve(base, &mut c.candidates);
        resolve(base, &mut c.ref_translation);
        for p in [&mut c.ref_interpreting, &mut c.ratings, &mut self.scoring.cache]
            .into_iter()
            .flatten()
        {
            resolve(base, p);
        }
    }

    pub fn scoring_context(&self) -> Result<ScoringContext> {
        let cache = match &self.scoring.cache {
            Some(p) => ScoreCache::open(p)?,
            None => ScoreCache::in_memory(),
        };
        let mut ctx = ScoringContext {
            cache,
            mwer: MwerOptions {
                lowercase: self.scoring.mwer_lowercase,
            },
            ..Default::default()
        };
        for (metric, sc) in &self.scoring.scorers {
            if !metric.is_neural() {
                return Err(Error::Invalid(format!(
                    "{} is computed natively and takes no external scorer",
                    metric.label()
                )));
            }
            ctx.scorers.insert(
                *metric,
                Box::new(CommandScorer::new(metric.label(), &sc.command, metric.needs_source())),
            );
        }
        Ok(ctx)
    }
}
