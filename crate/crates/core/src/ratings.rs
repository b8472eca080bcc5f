//! Continuous Rating sessions and their aggregate scores.
//!
//! Two per-session definitions are supported: [`cr`], the plain mean of all
//! clicks, and [`cri`], where each click is weighted by how long it stays in
//! effect (until the next click, or until the end of the document for the
//! last one).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{CandidateKey, Latency};
use crate::error::{Error, Result};

/// A click as it appears in a rating log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickRecord {
    pub t_ms: i64,
    pub value: i64,
}

/// One evaluator's pass over one candidate document, as exchanged with the
/// rating UI.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatingLog {
    pub evaluator: String,
    pub doc_id: String,
    pub system: String,
    pub latency: Latency,
    pub duration_ms: i64,
    pub clicks: Vec<ClickRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Click {
    pub t_ms: u64,
    pub value: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingSession {
    pub evaluator_id: String,
    pub doc_id: String,
    pub system_id: String,
    pub latency: Latency,
    pub duration_ms: u64,
    /// Strictly increasing in time.
    pub clicks: Vec<Click>,
}

impl RatingSession {
    /// Validates a raw log. Clicks sharing a timestamp collapse to the last
    /// one of the run.
    pub fn from_log(log: RatingLog) -> Result<Self> {
        if log.duration_ms < 0 {
            return Err(Error::Invalid("negative duration_ms".into()));
        }
        let duration_ms = log.duration_ms as u64;
        let mut clicks: Vec<Click> = Vec::with_capacity(log.clicks.len());
        for c in &log.clicks {
            if c.t_ms < 0 {
                return Err(Error::Invalid(format!(
                    "click at {} ms precedes playback start",
                    c.t_ms
                )));
            }
            if !(1..=4).contains(&c.value) {
                return Err(Error::Invalid(format!(
                    "click value {} outside 1..=4",
                    c.value
                )));
            }
            let t_ms = c.t_ms as u64;
            if t_ms > duration_ms {
                return Err(Error::Invalid(format!(
                    "click at {t_ms} ms after document end ({duration_ms} ms)"
                )));
            }
            let click = Click {
                t_ms,
                value: c.value as u8,
            };
            match clicks.last_mut() {
                Some(prev) if prev.t_ms == t_ms => {
                    log::warn!(
                        "{}/{}/{}/{}: simultaneous clicks at {t_ms} ms, keeping the last",
                        log.evaluator,
                        log.doc_id,
                        log.system,
                        log.latency
                    );
                    *prev = click;
                }
                Some(prev) if prev.t_ms > t_ms => {
                    return Err(Error::Invalid(format!(
                        "click times out of order ({} ms then {t_ms} ms)",
                        prev.t_ms
                    )));
                }
                _ => clicks.push(click),
            }
        }
        Ok(RatingSession {
            evaluator_id: log.evaluator,
            doc_id: log.doc_id,
            system_id: log.system,
            latency: log.latency,
            duration_ms,
            clicks,
        })
    }

    pub fn to_log(&self) -> RatingLog {
        RatingLog {
            evaluator: self.evaluator_id.clone(),
            doc_id: self.doc_id.clone(),
            system: self.system_id.clone(),
            latency: self.latency,
            duration_ms: self.duration_ms as i64,
            clicks: self
                .clicks
                .iter()
                .map(|c| ClickRecord {
                    t_ms: c.t_ms as i64,
                    value: c.value as i64,
                })
                .collect(),
        }
    }

    pub fn key(&self) -> CandidateKey {
        CandidateKey::new(&self.doc_id, &self.system_id, self.latency)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub enum CrDefinition {
    /// Plain average of clicks.
    #[default]
    #[serde(rename = "CR")]
    Cr,
    /// Interval-weighted average.
    #[serde(rename = "CRi")]
    Cri,
}

impl fmt::Display for CrDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CrDefinition::Cr => "CR",
            CrDefinition::Cri => "CRi",
        })
    }
}

impl FromStr for CrDefinition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "CR" | "cr" => Ok(CrDefinition::Cr),
            "CRi" | "cri" | "CRI" => Ok(CrDefinition::Cri),
            other => Err(Error::Invalid(format!("unknown CR definition `{other}`"))),
        }
    }
}

pub fn cr(session: &RatingSession) -> Result<f64> {
    if session.clicks.is_empty() {
        return Err(Error::UnratedSession);
    }
    let sum: u64 = session.clicks.iter().map(|c| c.value as u64).sum();
    Ok(sum as f64 / session.clicks.len() as f64)
}

pub fn cri(session: &RatingSession) -> Result<f64> {
    let clicks = &session.clicks;
    let (first, last) = match (clicks.first(), clicks.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::UnratedSession),
    };
    let end = session.duration_ms;
    if first.t_ms >= end {
        // Degenerate: no time elapses after the first click.
        return Ok(last.value as f64);
    }
    let mut weighted: u128 = 0;
    for w in clicks.windows(2) {
        weighted += (w[1].t_ms - w[0].t_ms) as u128 * w[0].value as u128;
    }
    weighted += (end - last.t_ms) as u128 * last.value as u128;
    Ok(weighted as f64 / (end - first.t_ms) as f64)
}

pub fn score_session(session: &RatingSession, definition: CrDefinition) -> Result<f64> {
    match definition {
        CrDefinition::Cr => cr(session),
        CrDefinition::Cri => cri(session),
    }
}

/// Mean of per-session scores for one candidate document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingScore {
    pub doc_id: String,
    pub system: String,
    pub latency: Latency,
    pub cr: f64,
    pub cri: f64,
    pub n_sessions: usize,
}

impl RatingScore {
    pub fn key(&self) -> CandidateKey {
        CandidateKey::new(&self.doc_id, &self.system, self.latency)
    }

    pub fn value(&self, definition: CrDefinition) -> f64 {
        match definition {
            CrDefinition::Cr => self.cr,
            CrDefinition::Cri => self.cri,
        }
    }
}

/// Groups sessions by candidate and averages them with equal weight.
/// Sessions without clicks are skipped; candidates left with no sessions do
/// not appear in the output.
pub fn aggregate_ratings<'a, I>(sessions: I) -> BTreeMap<CandidateKey, RatingScore>
where
    I: IntoIterator<Item = &'a RatingSession>,
{
    let mut groups: BTreeMap<CandidateKey, Vec<(f64, f64)>> = BTreeMap::new();
    for s in sessions {
        match (cr(s), cri(s)) {
            (Ok(a), Ok(b)) => groups.entry(s.key()).or_default().push((a, b)),
            _ => log::warn!(
                "skipping unrated session by `{}` on ({})",
                s.evaluator_id,
                s.key()
            ),
        }
    }
    groups
        .into_iter()
        .map(|(key, scores)| {
            let n = scores.len() as f64;
            let cr = scores.iter().map(|s| s.0).sum::<f64>() / n;
            let cri = scores.iter().map(|s| s.1).sum::<f64>() / n;
            let score = RatingScore {
                doc_id: key.doc_id.clone(),
                system: key.system.clone(),
                latency: key.latency,
                cr,
                cri,
                n_sessions: scores.len(),
            };
            (key, score)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn session(duration_ms: u64, clicks: &[(u64, u8)]) -> RatingSession {
        RatingSession {
            evaluator_id: "e".into(),
            doc_id: "d".into(),
            system_id: "s".into(),
            latency: Latency::Low,
            duration_ms,
            clicks: clicks
                .iter()
                .map(|&(t_ms, value)| Click { t_ms, value })
                .collect(),
        }
    }

    #[test]
    fn cr_examples() {
        assert_eq!(cr(&session(60_000, &[(10_000, 3)])).unwrap(), 3.0);
        let alt = session(10_000, &[(0, 1), (1000, 4), (2000, 1), (3000, 4)]);
        assert_eq!(cr(&alt).unwrap(), 2.5);
        let mut clicks: Vec<(u64, u8)> = (0..12).map(|i| (i * 5000, 1)).collect();
        clicks.push((60_000, 4));
        let s = session(120_000, &clicks);
        assert!((cr(&s).unwrap() - 16.0 / 13.0).abs() < 1e-12);
    }

    #[test]
    fn cr_unrated() {
        assert!(matches!(cr(&session(100, &[])), Err(Error::UnratedSession)));
        assert!(matches!(cri(&session(100, &[])), Err(Error::UnratedSession)));
    }

    #[test]
    fn cri_examples() {
        let s = session(120_000, &[(0, 1), (60_000, 4)]);
        assert_eq!(cri(&s).unwrap(), 2.5);
        assert_eq!(cri(&session(100_000, &[(5000, 2)])).unwrap(), 2.0);
    }

    #[test]
    fn cri_matches_step_integral() {
        // Midpoint-rule integral of the rating step function over [t_1, T].
        let s = session(120_000, &[(0, 1), (60_000, 4)]);
        let steps = 120_000;
        let mut acc = 0.0;
        for k in 0..steps {
            let t = k as f64 + 0.5;
            let v = if t < 60_000.0 { 1.0 } else { 4.0 };
            acc += v;
        }
        assert!((acc / steps as f64 - cri(&s).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn cri_degenerate_first_click_at_end() {
        let s = session(1000, &[(1000, 3)]);
        assert_eq!(cri(&s).unwrap(), 3.0);
    }

    #[test]
    fn from_log_validation() {
        let base = RatingLog {
            evaluator: "e".into(),
            doc_id: "d".into(),
            system: "s".into(),
            latency: Latency::High,
            duration_ms: 1000,
            clicks: vec![],
        };
        let with = |clicks: &[(i64, i64)]| RatingLog {
            clicks: clicks
                .iter()
                .map(|&(t_ms, value)| ClickRecord { t_ms, value })
                .collect(),
            ..base.clone()
        };
        assert!(RatingSession::from_log(with(&[(-1, 2)])).is_err());
        assert!(RatingSession::from_log(with(&[(10, 5)])).is_err());
        assert!(RatingSession::from_log(with(&[(1001, 2)])).is_err());
        assert!(RatingSession::from_log(with(&[(20, 2), (10, 2)])).is_err());
        let s = RatingSession::from_log(with(&[(10, 2), (10, 4), (20, 1)])).unwrap();
        assert_eq!(
            s.clicks,
            vec![Click { t_ms: 10, value: 4 }, Click { t_ms: 20, value: 1 }]
        );
        assert_eq!(RatingSession::from_log(s.to_log()).unwrap(), s);
    }

    #[test]
    fn aggregate_means() {
        let mut a = session(100, &[(0, 2)]);
        let mut b = session(100, &[(0, 3)]);
        a.evaluator_id = "a".into();
        b.evaluator_id = "b".into();
        let single = {
            let mut c = session(100, &[(0, 4), (50, 2)]);
            c.system_id = "other".into();
            c
        };
        let unrated = {
            let mut c = session(100, &[]);
            c.system_id = "silent".into();
            c
        };
        let agg = aggregate_ratings([&a, &b, &single, &unrated]);
        assert_eq!(agg.len(), 2);
        let pair = &agg[&a.key()];
        assert_eq!(pair.cr, 2.5);
        assert_eq!(pair.n_sessions, 2);
        let one = &agg[&single.key()];
        assert_eq!(one.cr, 3.0);
        assert_eq!(one.cri, 3.0);
        assert_eq!(one.n_sessions, 1);
    }

    fn arb_session() -> impl Strategy<Value = RatingSession> {
        proptest::collection::vec((1u64..5000, 1u8..=4), 1..30).prop_flat_map(|gaps| {
            let mut t = 0;
            let clicks: Vec<(u64, u8)> = gaps
                .iter()
                .map(|&(g, v)| {
                    t += g;
                    (t, v)
                })
                .collect();
            let last = t;
            (Just(clicks), 0u64..10_000).prop_map(move |(clicks, tail)| session(last + tail, &clicks))
        })
    }

    proptest! {
        #[test]
        fn scores_within_click_range(s in arb_session()) {
            let lo = s.clicks.iter().map(|c| c.value).min().unwrap() as f64;
            let hi = s.clicks.iter().map(|c| c.value).max().unwrap() as f64;
            for v in [cr(&s).unwrap(), cri(&s).unwrap()] {
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }

        #[test]
        fn cri_nondecreasing_in_duration_when_last_is_max(s in arb_session(), extra in 1u64..100_000) {
            let hi = s.clicks.iter().map(|c| c.value).max().unwrap();
            prop_assume!(s.clicks.last().unwrap().value == hi);
            let mut longer = s.clone();
            longer.duration_ms += extra;
            prop_assert!(cri(&longer).unwrap() >= cri(&s).unwrap() - 1e-12);
            prop_assert_eq!(cr(&longer).unwrap(), cr(&s).unwrap());
        }
    }
}
