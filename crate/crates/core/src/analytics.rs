//! Cohort metrics computed from event logs and survey responses.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::event::{EventBody, GameEvent};
use crate::ids::{ScenarioId, SessionId};
use crate::scenario::{Scenario, ZoneKind};
use crate::session::{replay, Phase, PlayerAction, ReplayError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Answer {
    Rating(u8),
    Choice(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyResponse {
    pub session_id: SessionId,
    pub question: String,
    pub answer: Answer,
}

impl SurveyResponse {
    pub fn validate(&self) -> Result<(), AnalyticsError> {
        match self.answer {
            Answer::Rating(r) if !(1..=5).contains(&r) => Err(AnalyticsError::RatingOutOfRange(r)),
            _ if self.question.is_empty() => Err(AnalyticsError::EmptyQuestion),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalyticsError {
    #[error("no responses for question {0}")]
    NoResponses(String),
    #[error("rating {0} is outside 1..=5")]
    RatingOutOfRange(u8),
    #[error("question id must not be empty")]
    EmptyQuestion,
    #[error("session {session}: {source}")]
    CorruptLog {
        session: SessionId,
        source: ReplayError,
    },
    #[error("session {session} uses unknown scenario {scenario}")]
    UnknownScenario {
        session: SessionId,
        scenario: ScenarioId,
    },
}

impl AnalyticsError {
    pub fn code(&self) -> &'static str {
        match self {
            AnalyticsError::NoResponses(_) => "no-responses",
            AnalyticsError::RatingOutOfRange(_) | AnalyticsError::EmptyQuestion => "invalid-survey",
            AnalyticsError::CorruptLog { .. } | AnalyticsError::UnknownScenario { .. } => {
                "corrupt-log"
            }
        }
    }
}

/// `100 * count / total` rounded half-up to one decimal, computed in integers.
pub fn percent_one_decimal(count: usize, total: usize) -> f64 {
    debug_assert!(total > 0 && count <= total);
    let tenths = (2000 * count as u64 + total as u64) / (2 * total as u64);
    tenths as f64 / 10.0
}

fn distribution<K: Ord + Clone>(keys: &[K]) -> BTreeMap<K, f64> {
    let mut counts: BTreeMap<K, usize> = BTreeMap::new();
    for k in keys {
        *counts.entry(k.clone()).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(k, c)| (k, percent_one_decimal(c, keys.len())))
        .collect()
}

/// Percentage of each rating given to `question`, keyed only by ratings present.
pub fn rating_distribution(
    responses: &[SurveyResponse],
    question: &str,
) -> Result<BTreeMap<u8, f64>, AnalyticsError> {
    let ratings: Vec<u8> = responses
        .iter()
        .filter(|r| r.question == question)
        .filter_map(|r| match r.answer {
            Answer::Rating(v) => Some(v),
            Answer::Choice(_) => None,
        })
        .collect();
    if ratings.is_empty() {
        return Err(AnalyticsError::NoResponses(String::from(question)));
    }
    Ok(distribution(&ratings))
}

pub fn choice_distribution(
    responses: &[SurveyResponse],
    question: &str,
) -> Result<BTreeMap<String, f64>, AnalyticsError> {
    let choices: Vec<String> = responses
        .iter()
        .filter(|r| r.question == question)
        .filter_map(|r| match &r.answer {
            Answer::Choice(c) => Some(c.clone()),
            Answer::Rating(_) => None,
        })
        .collect();
    if choices.is_empty() {
        return Err(AnalyticsError::NoResponses(String::from(question)));
    }
    Ok(distribution(&choices))
}

/// Median of the values; the mean of the two middle values for even counts.
pub fn median(values: &[u64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let mid = sorted.len() / 2;
    Some(if sorted.len() % 2 == 1 {
        sorted[mid] as f64
    } else {
        (sorted[mid - 1] as f64 + sorted[mid] as f64) / 2.0
    })
}

fn mean(values: &[u32]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    Some(values.iter().map(|v| f64::from(*v)).sum::<f64>() / values.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneStats {
    pub zone: ZoneKind,
    /// Sessions that entered the zone.
    pub entered: usize,
    /// Sessions that submitted the zone at least once (pass or fail).
    pub submitted: usize,
    /// Median seconds from entering the zone to its first accepted submit.
    pub median_seconds: Option<f64>,
    /// Mean submit actions (accepted and rejected) per entering session.
    pub mean_attempts: Option<f64>,
    /// Mean hints revealed per entering session.
    pub mean_hints: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortReport {
    pub sessions: usize,
    pub completed: usize,
    pub expired: usize,
    /// Percentage of all sessions that completed, one decimal.
    pub completion_rate: f64,
    pub zones: Vec<ZoneStats>,
    pub ratings: BTreeMap<String, BTreeMap<u8, f64>>,
    pub choices: BTreeMap<String, BTreeMap<String, f64>>,
}

#[derive(Default)]
struct ZoneTally {
    entered_at: Option<u64>,
    duration: Option<u64>,
    attempts: u32,
    hints: u32,
}

fn submit_zone(action: &PlayerAction) -> Option<ZoneKind> {
    match action {
        PlayerAction::SubmitRanking { .. } => Some(ZoneKind::Maze),
        PlayerAction::SubmitMatching => Some(ZoneKind::Matching),
        PlayerAction::SubmitPolicy => Some(ZoneKind::Policy),
        _ => None,
    }
}

/// Per-zone timing, attempts and hints, plus completion, for a cohort.
/// Every log is replayed first; a log that does not replay is an error.
pub fn difficulty_report(
    logs: &[Vec<GameEvent>],
    scenarios: &[Scenario],
) -> Result<CohortReport, AnalyticsError> {
    let mut tallies: [Vec<ZoneTally>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut completed = 0;
    let mut expired = 0;

    for log in logs {
        let Some(first) = log.first() else {
            return Err(AnalyticsError::CorruptLog {
                session: SessionId::new(""),
                source: ReplayError::Empty,
            });
        };
        let session = first.session_id.clone();
        let scenario_id = match &first.body {
            EventBody::Created { scenario_id } => scenario_id,
            _ => {
                return Err(AnalyticsError::CorruptLog {
                    session,
                    source: ReplayError::CorruptLog {
                        seq: first.seq,
                        reason: String::from("first event is not a creation event"),
                    },
                })
            }
        };
        let scenario = scenarios
            .iter()
            .find(|s| &s.id == scenario_id)
            .ok_or_else(|| AnalyticsError::UnknownScenario {
                session: session.clone(),
                scenario: scenario_id.clone(),
            })?;
        let state = replay(log, scenario).map_err(|source| AnalyticsError::CorruptLog {
            session: session.clone(),
            source,
        })?;
        match state.phase {
            Phase::Completed => completed += 1,
            Phase::Expired => expired += 1,
            _ => {}
        }

        let mut zones: [ZoneTally; 3] = Default::default();
        for e in log {
            if e.phase != e.phase_after {
                if let Some(z) = e.phase_after.zone() {
                    zones[z.index()].entered_at = Some(e.timestamp.secs());
                }
            }
            let EventBody::Action { action } = &e.body else {
                continue;
            };
            if let Some(z) = submit_zone(action) {
                let tally = &mut zones[z.index()];
                tally.attempts += 1;
                if e.outcome.is_accepted() && tally.duration.is_none() {
                    tally.duration = tally.entered_at.map(|t| e.timestamp.secs() - t);
                }
            }
            if let (PlayerAction::RequestHint { puzzle }, true) = (action, e.outcome.is_accepted())
            {
                if let Some(h) = scenario.hint_set(puzzle) {
                    zones[h.zone.index()].hints += 1;
                }
            }
        }
        for (i, z) in zones.into_iter().enumerate() {
            if z.entered_at.is_some() {
                tallies[i].push(z);
            }
        }
    }

    let zones = ZoneKind::ALL
        .iter()
        .map(|zone| {
            let t = &tallies[zone.index()];
            let durations: Vec<u64> = t.iter().filter_map(|z| z.duration).collect();
            let attempts: Vec<u32> = t.iter().map(|z| z.attempts).collect();
            let hints: Vec<u32> = t.iter().map(|z| z.hints).collect();
            ZoneStats {
                zone: *zone,
                entered: t.len(),
                submitted: durations.len(),
                median_seconds: median(&durations),
                mean_attempts: mean(&attempts),
                mean_hints: mean(&hints),
            }
        })
        .collect();

    Ok(CohortReport {
        sessions: logs.len(),
        completed,
        expired,
        completion_rate: if logs.is_empty() {
            0.0
        } else {
            percent_one_decimal(completed, logs.len())
        },
        zones,
        ratings: BTreeMap::new(),
        choices: BTreeMap::new(),
    })
}

/// [`difficulty_report`] plus the distribution for every surveyed question.
pub fn cohort_report(
    logs: &[Vec<GameEvent>],
    scenarios: &[Scenario],
    responses: &[SurveyResponse],
) -> Result<CohortReport, AnalyticsError> {
    let mut report = difficulty_report(logs, scenarios)?;
    let questions: alloc::collections::BTreeSet<&str> =
        responses.iter().map(|r| r.question.as_str()).collect();
    for q in questions {
        if let Ok(d) = rating_distribution(responses, q) {
            report.ratings.insert(String::from(q), d);
        }
        if let Ok(d) = choice_distribution(responses, q) {
            report.choices.insert(String::from(q), d);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::{NodeId, PuzzleId, Timestamp};
    use crate::session::Session;
    use crate::testkit;
    use alloc::vec;
    use proptest::prelude::*;

    fn ratings(values: &[u8]) -> Vec<SurveyResponse> {
        values
            .iter()
            .enumerate()
            .map(|(i, v)| SurveyResponse {
                session_id: SessionId::new(alloc::format!("s{i}")),
                question: String::from("engagement"),
                answer: Answer::Rating(*v),
            })
            .collect()
    }

    #[test]
    fn fourteen_respondents() {
        let mut values = vec![5u8; 10];
        values.extend([4, 4, 4, 1]);
        let d = rating_distribution(&ratings(&values), "engagement").unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d[&5], 71.4);
        assert_eq!(d[&4], 21.4);
        assert_eq!(d[&1], 7.1);
    }

    #[test]
    fn uniform_and_empty() {
        let d = rating_distribution(&ratings(&[3, 3, 3, 3]), "engagement").unwrap();
        assert_eq!(d.into_iter().collect::<Vec<_>>(), vec![(3, 100.0)]);
        let err = rating_distribution(&ratings(&[3]), "satisfaction").unwrap_err();
        assert_eq!(err.code(), "no-responses");
    }

    #[test]
    fn rating_range_is_checked() {
        assert!(ratings(&[0])[0].validate().is_err());
        assert!(ratings(&[6])[0].validate().is_err());
        assert!(ratings(&[5])[0].validate().is_ok());
    }

    #[test]
    fn median_cases() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[7]), Some(7.0));
        assert_eq!(median(&[9, 1, 4, 6]), Some(5.0));
    }

    fn walk(session: &mut Session, s: &Scenario, start: u64) {
        session
            .apply(s, &PlayerAction::Start, Timestamp(start))
            .unwrap();
        session
            .apply(
                s,
                &PlayerAction::RequestHint {
                    puzzle: PuzzleId::new("maze_triage"),
                },
                Timestamp(start + 5),
            )
            .unwrap();
        session
            .apply(
                s,
                &PlayerAction::Move {
                    to: NodeId::new("reception"),
                },
                Timestamp(start + 10),
            )
            .unwrap();
        session
            .apply(
                s,
                &PlayerAction::SubmitRanking { ordered: vec![] },
                Timestamp(start + 40),
            )
            .unwrap();
    }

    #[test]
    fn durations_and_completion_from_constructed_logs() {
        let s = testkit::reference();
        let mut a = Session::create(&s, SessionId::new("a"), Timestamp(0)).unwrap();
        walk(&mut a, &s, 100);
        assert!(a.expire_if_due(Timestamp(5000)));
        let mut b = Session::create(&s, SessionId::new("b"), Timestamp(0)).unwrap();
        walk(&mut b, &s, 200);
        let _ = b.apply(&s, &PlayerAction::SubmitMatching, Timestamp(210));

        let report =
            difficulty_report(&[a.log().to_vec(), b.log().to_vec()], &[s.clone()]).unwrap();
        assert_eq!(report.sessions, 2);
        assert_eq!(report.expired, 1);
        assert_eq!(report.completion_rate, 0.0);
        let maze = &report.zones[0];
        assert_eq!(maze.entered, 2);
        assert_eq!(maze.median_seconds, Some(40.0));
        // b also sent a rejected submit_matching, which counts toward zone 2.
        assert_eq!(maze.mean_attempts, Some(1.0));
        assert_eq!(maze.mean_hints, Some(1.0));
        assert_eq!(report.zones[1].entered, 0);
    }

    #[test]
    fn corrupt_log_is_reported() {
        let s = testkit::reference();
        let mut a = Session::create(&s, SessionId::new("a"), Timestamp(0)).unwrap();
        walk(&mut a, &s, 1);
        let mut log = a.log().to_vec();
        log.remove(2);
        let err = difficulty_report(&[log], &[s]).unwrap_err();
        assert_eq!(err.code(), "corrupt-log");
    }

    proptest! {
        #[test]
        fn distribution_matches_counting(values in prop::collection::vec(1u8..=5, 1..=100)) {
            let d = rating_distribution(&ratings(&values), "engagement").unwrap();
            let n = values.len() as f64;
            let mut sum = 0.0;
            for r in 1u8..=5 {
                let count = values.iter().filter(|v| **v == r).count();
                match d.get(&r) {
                    None => prop_assert_eq!(count, 0),
                    Some(p) => {
                        prop_assert!(count > 0);
                        prop_assert!((0.0..=100.0).contains(p));
                        prop_assert!((p - 100.0 * count as f64 / n).abs() <= 0.05 + 1e-9);
                        sum += p;
                    }
                }
            }
            prop_assert!((sum - 100.0).abs() <= 0.3 + 1e-9);
        }

        #[test]
        fn median_matches_sort_and_pick(values in prop::collection::vec(0u64..10_000, 1..50)) {
            let mut sorted = values.clone();
            sorted.sort();
            let n = sorted.len();
            let expected = if n % 2 == 1 {
                sorted[n / 2] as f64
            } else {
                (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
            };
            prop_assert_eq!(median(&values), Some(expected));
        }
    }
}
