//! Zone 1: the risk maze.
//!
//! Players walk a directed node graph, decide for each encounter whether it is
//! a real risk, and then rank the risks they flagged. Ranking quality is the
//! fraction of item pairs ordered the same way as [`rank_oracle`].

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use serde::{Deserialize, Serialize};

use crate::ids::{NodeId, RiskId};
use crate::scenario::{MazeZone, RankingWeights, RiskCard, Scenario, ZoneKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MazeState {
    pub current_node: NodeId,
    pub visited: BTreeSet<NodeId>,
    pub flags: BTreeMap<RiskId, bool>,
    /// Submitted ranking restricted to the true risks the player flagged.
    pub ranking: Option<Vec<RiskId>>,
    pub submitted: bool,
    pub result: Option<RankingResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankingResult {
    pub score: f64,
    pub flag_precision: f64,
    pub flag_recall: f64,
    pub zone_score: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MazeError {
    #[error("no edge from {from} to {to}")]
    NoSuchEdge { from: NodeId, to: NodeId },
    #[error("unknown risk {0}")]
    UnknownRisk(RiskId),
    #[error("encounter {0} is on a node that has not been visited")]
    EncounterNotVisited(RiskId),
    #[error("ranking must be a permutation of the risks flagged as real")]
    InvalidPermutation,
    #[error("zone already submitted")]
    AlreadySubmitted,
}

impl MazeError {
    pub fn code(&self) -> &'static str {
        match self {
            MazeError::NoSuchEdge { .. } => "no-such-edge",
            MazeError::UnknownRisk(_) => "unknown-risk",
            MazeError::EncounterNotVisited(_) => "encounter-not-visited",
            MazeError::InvalidPermutation => "invalid-permutation",
            MazeError::AlreadySubmitted => "zone-already-submitted",
        }
    }
}

impl MazeState {
    pub fn new(maze: &MazeZone) -> Self {
        let mut visited = BTreeSet::new();
        visited.insert(maze.entry.clone());
        Self {
            current_node: maze.entry.clone(),
            visited,
            flags: BTreeMap::new(),
            ranking: None,
            submitted: false,
            result: None,
        }
    }

    /// Risks the player has flagged as real, in id order.
    pub fn flagged_true(&self) -> impl Iterator<Item = &RiskId> {
        self.flags.iter().filter(|(_, v)| **v).map(|(k, _)| k)
    }

    /// Flagged-true risks that really are risks.
    pub fn identified<'a>(&'a self, maze: &'a MazeZone) -> BTreeSet<&'a RiskId> {
        self.flagged_true()
            .filter(|id| maze.risk(id).is_some_and(|r| r.is_true_risk))
            .collect()
    }

    fn ensure_open(&self) -> Result<(), MazeError> {
        if self.submitted {
            Err(MazeError::AlreadySubmitted)
        } else {
            Ok(())
        }
    }
}

pub fn move_to(state: &MazeState, to: &NodeId, maze: &MazeZone) -> Result<MazeState, MazeError> {
    state.ensure_open()?;
    if !maze.has_edge(&state.current_node, to) {
        return Err(MazeError::NoSuchEdge {
            from: state.current_node.clone(),
            to: to.clone(),
        });
    }
    let mut next = state.clone();
    next.current_node = to.clone();
    next.visited.insert(to.clone());
    Ok(next)
}

/// Records (or overwrites) the player's decision for an encounter.
pub fn flag_risk(
    state: &MazeState,
    risk: &RiskId,
    decision: bool,
    maze: &MazeZone,
) -> Result<MazeState, MazeError> {
    state.ensure_open()?;
    let node = maze
        .node_of(risk)
        .ok_or_else(|| MazeError::UnknownRisk(risk.clone()))?;
    if !state.visited.contains(&node.id) {
        return Err(MazeError::EncounterNotVisited(risk.clone()));
    }
    let mut next = state.clone();
    next.flags.insert(risk.clone(), decision);
    Ok(next)
}

/// Strict priority order: severity descending, then impact descending, then id.
pub fn oracle_cmp(a: &RiskCard, b: &RiskCard) -> Ordering {
    let key = |r: &RiskCard| (Reverse(r.severity()), Reverse(r.impact));
    key(a).cmp(&key(b)).then_with(|| a.id.cmp(&b.id))
}

pub fn rank_oracle<'a>(risks: impl IntoIterator<Item = &'a RiskCard>) -> Vec<RiskId> {
    let mut risks: Vec<&RiskCard> = risks.into_iter().collect();
    risks.sort_by(|a, b| oracle_cmp(a, b));
    risks.into_iter().map(|r| r.id.clone()).collect()
}

/// Fraction of pairs in `ordered` that agree with the oracle. Pairs the oracle
/// ties on severity and impact are left out; no comparable pairs scores 1.0.
pub fn concordance(ordered: &[&RiskCard]) -> f64 {
    let mut agree = 0usize;
    let mut total = 0usize;
    for (i, a) in ordered.iter().enumerate() {
        for b in &ordered[i + 1..] {
            let ka = (a.severity(), a.impact);
            let kb = (b.severity(), b.impact);
            if ka == kb {
                continue;
            }
            total += 1;
            if ka > kb {
                agree += 1;
            }
        }
    }
    if total == 0 {
        1.0
    } else {
        agree as f64 / total as f64
    }
}

/// Weighted blend of ranking score, flag precision and flag recall.
pub fn blend(weights: &RankingWeights, score: f64, precision: f64, recall: f64) -> f64 {
    let z = weights.ranking * score + weights.precision * precision + weights.recall * recall;
    z.clamp(0.0, 1.0)
}

pub fn submit_ranking(
    state: &MazeState,
    ordered: &[RiskId],
    scenario: &Scenario,
) -> Result<(MazeState, RankingResult), MazeError> {
    state.ensure_open()?;
    let maze = &scenario.maze;

    let flagged: BTreeSet<&RiskId> = state.flagged_true().collect();
    let given: BTreeSet<&RiskId> = ordered.iter().collect();
    if given.len() != ordered.len() || given != flagged {
        return Err(MazeError::InvalidPermutation);
    }

    let ranked: Vec<&RiskCard> = ordered
        .iter()
        .filter_map(|id| maze.risk(id))
        .filter(|r| r.is_true_risk)
        .collect();
    let hits = ranked.len();
    let true_total = maze.true_risks().count();

    let score = concordance(&ranked);
    let flag_precision = if flagged.is_empty() {
        1.0
    } else {
        hits as f64 / flagged.len() as f64
    };
    let flag_recall = if true_total == 0 {
        1.0
    } else {
        hits as f64 / true_total as f64
    };
    let zone_score = blend(
        &scenario.scoring.ranking_weights,
        score,
        flag_precision,
        flag_recall,
    );
    let result = RankingResult {
        score,
        flag_precision,
        flag_recall,
        zone_score,
        passed: zone_score >= scenario.pass_threshold(ZoneKind::Maze),
    };

    let mut next = state.clone();
    next.ranking = Some(ranked.iter().map(|r| r.id.clone()).collect());
    next.submitted = true;
    next.result = Some(result);
    Ok((next, result))
}
