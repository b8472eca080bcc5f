use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "BLEU")]
    Bleu,
    #[serde(rename = "chrF")]
    Chrf,
    #[serde(rename = "BertScore")]
    BertScore,
    #[serde(rename = "COMET")]
    Comet,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Bleu, Metric::Chrf, Metric::BertScore, Metric::Comet];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Bleu => "BLEU",
            Metric::Chrf => "chrF",
            Metric::BertScore => "BertScore",
            Metric::Comet => "COMET",
        }
    }

    /// Scored out of process by an external model.
    pub fn is_neural(self) -> bool {
        matches!(self, Metric::BertScore | Metric::Comet)
    }

    pub fn needs_source(self) -> bool {
        self == Metric::Comet
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bleu" => Ok(Metric::Bleu),
            "chrf" => Ok(Metric::Chrf),
            "bertscore" | "berts" => Ok(Metric::BertScore),
            "comet" => Ok(Metric::Comet),
            _ => Err(Error::Invalid(format!("unknown metric `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ReferenceMode {
    #[serde(rename = "transl")]
    Transl,
    #[serde(rename = "intp")]
    Intp,
    #[serde(rename = "transl+intp")]
    TranslIntp,
}

impl ReferenceMode {
    pub fn label(self) -> &'static str {
        match self {
            ReferenceMode::Transl => "transl",
            ReferenceMode::Intp => "intp",
            ReferenceMode::TranslIntp => "transl+intp",
        }
    }

    pub fn uses_interpreting(self) -> bool {
        self != ReferenceMode::Transl
    }
}

impl FromStr for ReferenceMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "transl" => Ok(ReferenceMode::Transl),
            "intp" => Ok(ReferenceMode::Intp),
            "transl+intp" => Ok(ReferenceMode::TranslIntp),
            _ => Err(Error::Invalid(format!("unknown reference mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AlignmentMode {
    Sent,
    SingleSeq,
    #[serde(rename = "mWER")]
    Mwer,
    #[serde(rename = "Sent+mWER")]
    SentMwer,
}

impl AlignmentMode {
    pub fn label(self) -> &'static str {
        match self {
            AlignmentMode::Sent => "Sent",
            AlignmentMode::SingleSeq => "SingleSeq",
            AlignmentMode::Mwer => "mWER",
            AlignmentMode::SentMwer => "Sent+mWER",
        }
    }

    pub fn uses_mwer(self) -> bool {
        matches!(self, AlignmentMode::Mwer | AlignmentMode::SentMwer)
    }
}

impl FromStr for AlignmentMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Sent" => Ok(AlignmentMode::Sent),
            "SingleSeq" => Ok(AlignmentMode::SingleSeq),
            "mWER" => Ok(AlignmentMode::Mwer),
            "Sent+mWER" => Ok(AlignmentMode::SentMwer),
            _ => Err(Error::Invalid(format!("unknown alignment mode `{s}`"))),
        }
    }
}

/// A metric together with the reference(s) it is computed against and the
/// way candidate and reference segments are paired.
///
/// Legal combinations:
///
/// | reference     | alignment                |
/// |---------------|--------------------------|
/// | `transl`      | `Sent`, `SingleSeq`, `mWER` |
/// | `intp`        | `SingleSeq`, `mWER`      |
/// | `transl+intp` | `SingleSeq`, `Sent+mWER` |
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawVariant", into = "RawVariant")]
pub struct MetricVariant {
    pub metric: Metric,
    pub reference_mode: ReferenceMode,
    pub alignment_mode: AlignmentMode,
}

#[derive(Serialize, Deserialize)]
struct RawVariant {
    metric: Metric,
    reference_mode: ReferenceMode,
    alignment_mode: AlignmentMode,
}

impl TryFrom<RawVariant> for MetricVariant {
    type Error = Error;
    fn try_from(r: RawVariant) -> Result<Self> {
        MetricVariant::new(r.metric, r.reference_mode, r.alignment_mode)
    }
}

impl From<MetricVariant> for RawVariant {
    fn from(v: MetricVariant) -> Self {
        RawVariant {
            metric: v.metric,
            reference_mode: v.reference_mode,
            alignment_mode: v.alignment_mode,
        }
    }
}

impl MetricVariant {
    pub fn new(
        metric: Metric,
        reference_mode: ReferenceMode,
        alignment_mode: AlignmentMode,
    ) -> Result<Self> {
        use AlignmentMode::*;
        use ReferenceMode::*;
        let legal = matches!(
            (reference_mode, alignment_mode),
            (Transl, Sent | SingleSeq | Mwer) | (Intp, SingleSeq | Mwer) | (TranslIntp, SingleSeq | SentMwer)
        );
        let v = MetricVariant {
            metric,
            reference_mode,
            alignment_mode,
        };
        if legal {
            Ok(v)
        } else {
            Err(Error::IllegalVariant(v.label()))
        }
    }

    pub fn label(&self) -> String {
        format!(
            "{}/{}/{}",
            self.metric.label(),
            self.reference_mode.label(),
            self.alignment_mode.label()
        )
    }

    /// The four translation-reference, sentence-aligned variants.
    pub fn headline() -> Vec<MetricVariant> {
        Metric::ALL
            .iter()
            .map(|&m| MetricVariant::new(m, ReferenceMode::Transl, AlignmentMode::Sent).unwrap())
            .collect()
    }

    /// Every metric/reference/alignment combination studied in the
    /// variant-ranking table.
    pub fn ranking_universe() -> Vec<MetricVariant> {
        const ROWS: [&str; 23] = [
            "COMET/transl/Sent",
            "COMET/transl/SingleSeq",
            "COMET/transl+intp/SingleSeq",
            "COMET/intp/SingleSeq",
            "COMET/intp/mWER",
            "BertScore/transl/Sent",
            "BertScore/transl+intp/Sent+mWER",
            "BertScore/transl+intp/SingleSeq",
            "BertScore/transl/SingleSeq",
            "BertScore/intp/SingleSeq",
            "BertScore/intp/mWER",
            "chrF/transl+intp/Sent+mWER",
            "chrF/transl/Sent",
            "chrF/transl+intp/SingleSeq",
            "chrF/transl/SingleSeq",
            "chrF/intp/SingleSeq",
            "chrF/intp/mWER",
            "BLEU/transl+intp/SingleSeq",
            "BLEU/transl/SingleSeq",
            "BLEU/transl+intp/Sent+mWER",
            "BLEU/transl/Sent",
            "BLEU/intp/SingleSeq",
            "BLEU/intp/mWER",
        ];
        ROWS.iter().map(|r| r.parse().unwrap()).collect()
    }
}

impl fmt::Display for MetricVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Parses `metric/reference/alignment`, e.g. `COMET/transl/Sent`.
impl FromStr for MetricVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split('/').collect();
        match parts.as_slice() {
            [m, r, a] => MetricVariant::new(m.parse()?, r.parse()?, a.parse()?),
            _ => Err(Error::Invalid(format!(
                "variant `{s}` is not of the form metric/reference/alignment"
            ))),
        }
    }
}
