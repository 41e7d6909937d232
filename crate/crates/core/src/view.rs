//! What the player is allowed to see.
//!
//! These types are the only session data that crosses the gateway. None of
//! them carries an answer key, a true-risk flag, a flaw marker, element
//! coverage data or a reference solution.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ids::*;
use crate::matching::MatchResult;
use crate::maze::RankingResult;
use crate::policy::{self, GapReport, PolicyResult};
use crate::scenario::{Category, Scenario, ZoneKind};
use crate::session::{Phase, SessionState, ZoneResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: SessionId,
    pub scenario_id: ScenarioId,
    pub title: String,
    pub company_profile: String,
    pub phase: Phase,
    pub time_limit: u64,
    pub remaining_seconds: u64,
    pub zone_results: Vec<ZoneResult>,
    pub total_score: Option<f64>,
    pub hints: Vec<HintView>,
    pub maze: Option<MazeView>,
    pub matching: Option<MatchingView>,
    pub policy: Option<PolicyView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HintView {
    pub puzzle: PuzzleId,
    pub zone: ZoneKind,
    pub revealed: Vec<String>,
    pub remaining: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncounterView {
    pub risk: RiskId,
    pub node: NodeId,
    pub title: String,
    pub description: String,
    pub likelihood: u8,
    pub impact: u8,
    /// The player's own call, if made.
    pub flag: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MazeView {
    pub current_node: NodeId,
    pub description: String,
    pub moves: Vec<NodeId>,
    pub visited: Vec<NodeId>,
    pub encounters: Vec<EncounterView>,
    pub submitted: bool,
    pub result: Option<RankingResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameworkView {
    pub id: FrameworkId,
    pub name: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlView {
    pub id: ControlId,
    pub text: String,
    pub context_tag: Option<String>,
    pub assigned: Vec<FrameworkId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingView {
    pub frameworks: Vec<FrameworkView>,
    pub controls: Vec<ControlView>,
    pub submitted: bool,
    pub result: Option<MatchResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementView {
    pub id: ElementId,
    pub text: String,
    pub category: Category,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyView {
    pub library: Vec<ElementView>,
    pub selected: Vec<ElementId>,
    /// Live feedback for the current composition.
    pub gaps: Option<GapReport>,
    pub submitted: bool,
    pub result: Option<PolicyResult>,
}

fn reached(state: &SessionState, zone: ZoneKind) -> bool {
    state.phase != Phase::Lobby && state.zone_results.len() >= zone.index()
}

pub fn session_view(state: &SessionState, scenario: &Scenario, now: Timestamp) -> SessionView {
    let hints = scenario
        .hints
        .iter()
        .filter(|h| reached(state, h.zone))
        .map(|h| {
            let used = state.hints_used.get(&h.puzzle).copied().unwrap_or(0) as usize;
            HintView {
                puzzle: h.puzzle.clone(),
                zone: h.zone,
                revealed: h.tiers[..used.min(h.tiers.len())].to_vec(),
                remaining: h.tiers.len().saturating_sub(used),
            }
        })
        .collect();

    SessionView {
        session_id: state.session_id.clone(),
        scenario_id: state.scenario_id.clone(),
        title: scenario.title.clone(),
        company_profile: scenario.company_profile.clone(),
        phase: state.phase,
        time_limit: scenario.time_limit,
        remaining_seconds: state.remaining_seconds(now),
        zone_results: state.zone_results.clone(),
        total_score: state.total_score,
        hints,
        maze: reached(state, ZoneKind::Maze).then(|| maze_view(state, scenario)),
        matching: reached(state, ZoneKind::Matching).then(|| matching_view(state, scenario)),
        policy: reached(state, ZoneKind::Policy).then(|| policy_view(state, scenario)),
    }
}

fn maze_view(state: &SessionState, scenario: &Scenario) -> MazeView {
    let maze = &scenario.maze;
    let m = &state.maze;
    let encounters = maze
        .nodes
        .iter()
        .filter(|n| m.visited.contains(&n.id))
        .filter_map(|n| {
            let risk = maze.risk(n.encounter.as_ref()?)?;
            Some(EncounterView {
                risk: risk.id.clone(),
                node: n.id.clone(),
                title: risk.title.clone(),
                description: risk.description.clone(),
                likelihood: risk.likelihood,
                impact: risk.impact,
                flag: m.flags.get(&risk.id).copied(),
            })
        })
        .collect();
    MazeView {
        current_node: m.current_node.clone(),
        description: maze
            .node(&m.current_node)
            .map(|n| n.description.clone())
            .unwrap_or_default(),
        moves: if m.submitted {
            Vec::new()
        } else {
            maze.successors(&m.current_node).cloned().collect()
        },
        visited: m.visited.iter().cloned().collect(),
        encounters,
        submitted: m.submitted,
        result: m.result,
    }
}

fn matching_view(state: &SessionState, scenario: &Scenario) -> MatchingView {
    let zone = &scenario.matching;
    MatchingView {
        frameworks: zone
            .frameworks
            .iter()
            .map(|f| FrameworkView {
                id: f.id.clone(),
                name: f.name.clone(),
                description: f.description.clone(),
            })
            .collect(),
        controls: zone
            .controls
            .iter()
            .map(|c| ControlView {
                id: c.id.clone(),
                text: c.text.clone(),
                context_tag: c.context_tag.clone(),
                assigned: state
                    .matching
                    .assignments
                    .get(&c.id)
                    .map(|s| s.iter().cloned().collect())
                    .unwrap_or_default(),
            })
            .collect(),
        submitted: state.matching.submitted,
        result: state.matching.result.clone(),
    }
}

fn policy_view(state: &SessionState, scenario: &Scenario) -> PolicyView {
    let gaps = policy::evaluate_policy(&state.policy, &state.maze, &state.matching, scenario).ok();
    PolicyView {
        library: scenario
            .policy
            .elements
            .iter()
            .map(|e| ElementView {
                id: e.id.clone(),
                text: e.text.clone(),
                category: e.category,
            })
            .collect(),
        selected: state.policy.selected.clone(),
        gaps,
        submitted: state.policy.submitted,
        result: state.policy.result.clone(),
    }
}
