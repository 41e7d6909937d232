//! Solvability and authoring checks for a parsed scenario.
//!
//! Findings are data: a scenario with errors still lints successfully, it just
//! does not `pass`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::ids::NodeId;
use crate::matching::{self, MatchState};
use crate::maze::{self, MazeState};
use crate::policy::{self, PolicyState};
use crate::scenario::{MazeZone, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingSeverity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: FindingSeverity,
    pub code: String,
    pub message: String,
    pub location: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintReport {
    pub findings: Vec<Finding>,
    pub pass: bool,
}

impl LintReport {
    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == FindingSeverity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == FindingSeverity::Warning)
    }
}

struct Findings(Vec<Finding>);

impl Findings {
    fn push(&mut self, severity: FindingSeverity, code: &str, message: String, location: &str) {
        self.0.push(Finding {
            severity,
            code: code.to_string(),
            message,
            location: location.to_string(),
        });
    }

    fn error(&mut self, code: &str, message: String, location: &str) {
        self.push(FindingSeverity::Error, code, message, location);
    }

    fn warning(&mut self, code: &str, message: String, location: &str) {
        self.push(FindingSeverity::Warning, code, message, location);
    }
}

fn reachable(maze: &MazeZone) -> BTreeSet<&NodeId> {
    let mut seen = BTreeSet::new();
    let mut stack = alloc::vec![&maze.entry];
    while let Some(n) = stack.pop() {
        if seen.insert(n) {
            stack.extend(maze.successors(n));
        }
    }
    seen
}

pub fn lint_scenario(s: &Scenario) -> LintReport {
    let mut out = Findings(Vec::new());
    lint_maze(s, &mut out);
    lint_matching(s, &mut out);
    lint_policy(s, &mut out);
    lint_solutions(s, &mut out);

    let pass = !out.0.iter().any(|f| f.severity == FindingSeverity::Error);
    LintReport {
        findings: out.0,
        pass,
    }
}

fn lint_maze(s: &Scenario, out: &mut Findings) {
    let maze = &s.maze;
    let reach = reachable(maze);
    if !reach.contains(&maze.exit) {
        out.error(
            "exit-unreachable",
            format!(
                "exit unreachable: no path from \"{}\" to \"{}\"",
                maze.entry, maze.exit
            ),
            "scenario.zones[0].exit",
        );
    }
    for risk in maze.true_risks() {
        if let Some(node) = maze.node_of(&risk.id) {
            if !reach.contains(&node.id) {
                out.error(
                    "risk-unreachable",
                    format!(
                        "true-risk encounter \"{}\" on node \"{}\" is unreachable from the entry",
                        risk.id, node.id
                    ),
                    "scenario.zones[0].nodes",
                );
            }
        }
    }
    if maze.true_risks().next().is_none() {
        out.error(
            "no-true-risks",
            "the maze has no true-risk encounters".to_string(),
            "scenario.zones[0].risks",
        );
    }
    if maze.risks.iter().all(|r| r.is_true_risk) {
        out.warning(
            "no-distractors",
            "the maze has no distractor encounters".to_string(),
            "scenario.zones[0].risks",
        );
    }
}

fn lint_matching(s: &Scenario, out: &mut Findings) {
    if s.matching.controls.is_empty() {
        out.error(
            "no-controls",
            "the matching zone has no controls".to_string(),
            "scenario.zones[1].controls",
        );
    }
    if !s.matching.controls.iter().any(|c| c.answer_key.len() > 1) {
        out.warning(
            "no-overlap-controls",
            "no control maps to more than one framework".to_string(),
            "scenario.zones[1].controls",
        );
    }
}

fn lint_policy(s: &Scenario, out: &mut Findings) {
    let zone = &s.policy;
    for e in &zone.elements {
        for other in &e.contradicts {
            let symmetric = zone
                .element(other)
                .is_some_and(|o| o.contradicts.contains(&e.id));
            if !symmetric {
                out.error(
                    "asymmetric-contradiction",
                    format!(
                        "\"{}\" contradicts \"{}\" but not the other way round",
                        e.id, other
                    ),
                    "scenario.zones[2].elements",
                );
            }
        }
    }
    let has_flaw = zone
        .existing_policy
        .iter()
        .filter_map(|id| zone.element(id))
        .any(|e| e.is_flawed);
    if !has_flaw {
        out.error(
            "existing-policy-unflawed",
            "the existing policy must contain at least one flawed element".to_string(),
            "scenario.zones[2].existing_policy",
        );
    }
}

/// Plays each reference solution through its zone engine.
fn lint_solutions(s: &Scenario, out: &mut Findings) {
    let sol = &s.reference_solutions;
    const LOC: &str = "scenario.reference_solutions";

    let mut maze_state = MazeState::new(&s.maze);
    for node in sol.maze.path.iter().skip(1) {
        match maze::move_to(&maze_state, node, &s.maze) {
            Ok(next) => maze_state = next,
            Err(e) => {
                out.error(
                    "reference-solution-fails",
                    format!("reference solution fails maze navigation: {e}"),
                    "scenario.reference_solutions.maze.path",
                );
                return;
            }
        }
    }
    for (risk, decision) in &sol.maze.flags {
        match maze::flag_risk(&maze_state, risk, *decision, &s.maze) {
            Ok(next) => maze_state = next,
            Err(e) => {
                out.error(
                    "reference-solution-fails",
                    format!("reference solution fails risk flagging: {e}"),
                    "scenario.reference_solutions.maze.flags",
                );
                return;
            }
        }
    }
    match maze::submit_ranking(&maze_state, &sol.maze.ranking, s) {
        Ok((next, result)) => {
            maze_state = next;
            if !result.passed {
                out.error(
                    "reference-solution-fails",
                    format!(
                        "reference solution fails risk ranking: zone score {:.3} below threshold {}",
                        result.zone_score, s.zone_pass_thresholds[0]
                    ),
                    "scenario.reference_solutions.maze",
                );
            }
        }
        Err(e) => {
            out.error(
                "reference-solution-fails",
                format!("reference solution fails risk ranking: {e}"),
                "scenario.reference_solutions.maze.ranking",
            );
            return;
        }
    }

    let match_state = MatchState {
        assignments: sol.matching.assignments.clone(),
        ..MatchState::default()
    };
    let (match_state, result) =
        matching::score_matching(&match_state, s).expect("a fresh match state is never submitted");
    if !result.passed {
        out.error(
            "reference-solution-fails",
            format!(
                "reference solution fails framework matching: zone score {:.3} below threshold {}",
                result.zone_score, s.zone_pass_thresholds[1]
            ),
            "scenario.reference_solutions.matching",
        );
    }

    let policy_state = PolicyState {
        selected: sol.policy.selected.clone(),
        submitted: false,
        result: None,
    };
    match policy::submit_policy(&policy_state, &maze_state, &match_state, s) {
        Ok((_, result)) if !result.passed => {
            let failing: BTreeSet<&str> = result
                .report
                .gaps
                .iter()
                .filter(|g| g.blocking)
                .map(|g| g.rule_id.as_str())
                .collect();
            let failing: Vec<&str> = failing.into_iter().collect();
            out.error(
                "reference-solution-fails",
                format!(
                    "reference solution fails policy rules: {} (zone score {:.3})",
                    failing.join(", "),
                    result.zone_score
                ),
                "scenario.reference_solutions.policy",
            );
        }
        Ok(_) => {}
        Err(e) => out.error(
            "reference-solution-fails",
            format!("reference solution fails policy rules: {e}"),
            LOC,
        ),
    }
}
