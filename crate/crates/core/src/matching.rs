//! Zone 2: matching security controls to governance frameworks.
//!
//! Assignments are set-valued so overlap controls can be placed on several
//! frameworks. Each control scores the Jaccard similarity between the
//! player's set and the answer key.

use alloc::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ids::{ControlId, FrameworkId};
use crate::scenario::{MatchingZone, Scenario, ZoneKind};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchState {
    pub assignments: BTreeMap<ControlId, BTreeSet<FrameworkId>>,
    pub submitted: bool,
    pub result: Option<MatchResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub per_control: BTreeMap<ControlId, f64>,
    pub zone_score: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatchError {
    #[error("unknown control {0}")]
    UnknownControl(ControlId),
    #[error("unknown framework {0}")]
    UnknownFramework(FrameworkId),
    #[error("zone already submitted")]
    AlreadySubmitted,
}

impl MatchError {
    pub fn code(&self) -> &'static str {
        match self {
            MatchError::UnknownControl(_) => "unknown-control",
            MatchError::UnknownFramework(_) => "unknown-framework",
            MatchError::AlreadySubmitted => "zone-already-submitted",
        }
    }
}

/// `|a ∩ b| / |a ∪ b|`, with two empty sets scoring 0.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Replaces the assignment for `control`; an empty set clears it.
pub fn assign(
    state: &MatchState,
    control: &ControlId,
    frameworks: &BTreeSet<FrameworkId>,
    zone: &MatchingZone,
) -> Result<MatchState, MatchError> {
    if state.submitted {
        return Err(MatchError::AlreadySubmitted);
    }
    if zone.control(control).is_none() {
        return Err(MatchError::UnknownControl(control.clone()));
    }
    if let Some(f) = frameworks.iter().find(|f| zone.framework(f).is_none()) {
        return Err(MatchError::UnknownFramework(f.clone()));
    }
    let mut next = state.clone();
    if frameworks.is_empty() {
        next.assignments.remove(control);
    } else {
        next.assignments.insert(control.clone(), frameworks.clone());
    }
    Ok(next)
}

/// Scores the board without submitting it.
pub fn evaluate(state: &MatchState, scenario: &Scenario) -> MatchResult {
    let empty = BTreeSet::new();
    let controls = &scenario.matching.controls;
    let per_control: BTreeMap<ControlId, f64> = controls
        .iter()
        .map(|c| {
            let assigned = state.assignments.get(&c.id).unwrap_or(&empty);
            (c.id.clone(), jaccard(assigned, &c.answer_key))
        })
        .collect();
    let zone_score = if controls.is_empty() {
        0.0
    } else {
        per_control.values().sum::<f64>() / controls.len() as f64
    };
    MatchResult {
        per_control,
        zone_score,
        passed: zone_score >= scenario.pass_threshold(ZoneKind::Matching),
    }
}

pub fn score_matching(
    state: &MatchState,
    scenario: &Scenario,
) -> Result<(MatchState, MatchResult), MatchError> {
    if state.submitted {
        return Err(MatchError::AlreadySubmitted);
    }
    let result = evaluate(state, scenario);
    let mut next = state.clone();
    next.submitted = true;
    next.result = Some(result.clone());
    Ok((next, result))
}

/// Frameworks the player placed correctly on at least one control.
pub fn matched_frameworks<'a>(
    state: &'a MatchState,
    zone: &'a MatchingZone,
) -> BTreeSet<&'a FrameworkId> {
    zone.controls
        .iter()
        .filter_map(|c| {
            state
                .assignments
                .get(&c.id)
                .map(|a| a.intersection(&c.answer_key))
        })
        .flatten()
        .collect()
}
