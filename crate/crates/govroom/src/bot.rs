//! Headless players: the reference script and a seeded random bot.

use std::collections::BTreeSet;

use govroom_core::policy::PolicyEdit;
use govroom_core::session::{reference_script, Feedback, ZoneResult};
use govroom_core::*;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Produces actions for a session, one at a time.
pub trait Player {
    fn next_action(&mut self, state: &SessionState, scenario: &Scenario) -> Option<PlayerAction>;
    fn observe(&mut self, _result: &Result<Feedback, SessionError>) {}
}

/// Plays the reference script in order, then stops.
pub struct ReferenceBot {
    script: std::vec::IntoIter<PlayerAction>,
}

impl ReferenceBot {
    pub fn new(scenario: &Scenario) -> Self {
        ReferenceBot {
            script: reference_script(scenario).into_iter(),
        }
    }
}

impl Player for ReferenceBot {
    fn next_action(&mut self, _: &SessionState, _: &Scenario) -> Option<PlayerAction> {
        self.script.next()
    }
}

/// Mixes steps of the reference script with arbitrary, often invalid,
/// actions. `guided` is the probability of taking the next scripted step.
pub struct RandomBot {
    rng: ChaCha8Rng,
    guided: f64,
    script: Vec<PlayerAction>,
    cursor: usize,
}

impl RandomBot {
    pub fn new(scenario: &Scenario, seed: u64, guided: f64) -> Self {
        RandomBot {
            rng: ChaCha8Rng::seed_from_u64(seed),
            guided: guided.clamp(0.0, 1.0),
            script: reference_script(scenario),
            cursor: 0,
        }
    }

    pub fn random_action(&mut self, state: &SessionState, s: &Scenario) -> PlayerAction {
        let rng = &mut self.rng;
        let bogus = || "no_such_thing".to_string();
        match rng.random_range(0..9) {
            0 => PlayerAction::Start,
            1 => {
                let to = if rng.random_bool(0.7) {
                    let next: Vec<&NodeId> = s.maze.successors(&state.maze.current_node).collect();
                    next.choose(rng).map(|n| (*n).clone())
                } else {
                    s.maze.nodes.choose(rng).map(|n| n.id.clone())
                };
                PlayerAction::Move {
                    to: to.unwrap_or_else(|| NodeId::new(bogus())),
                }
            }
            2 => PlayerAction::FlagRisk {
                risk: if rng.random_bool(0.9) {
                    s.maze.risks.choose(rng).unwrap().id.clone()
                } else {
                    RiskId::new(bogus())
                },
                decision: rng.random_bool(0.5),
            },
            3 => {
                let mut ordered: Vec<RiskId> = state.maze.flagged_true().cloned().collect();
                ordered.shuffle(rng);
                if rng.random_bool(0.1) {
                    ordered.pop();
                }
                PlayerAction::SubmitRanking { ordered }
            }
            4 => PlayerAction::Assign {
                control: if rng.random_bool(0.9) {
                    s.matching.controls.choose(rng).unwrap().id.clone()
                } else {
                    ControlId::new(bogus())
                },
                frameworks: s
                    .matching
                    .frameworks
                    .iter()
                    .filter(|_| rng.random_bool(0.4))
                    .map(|f| f.id.clone())
                    .collect::<BTreeSet<_>>(),
            },
            5 => PlayerAction::SubmitMatching,
            6 => {
                let element = if rng.random_bool(0.9) {
                    s.policy.elements.choose(rng).unwrap().id.clone()
                } else {
                    ElementId::new(bogus())
                };
                let position = rng.random_range(0..=state.policy.selected.len() + 1);
                let edit = match rng.random_range(0..3) {
                    0 => PolicyEdit::Add { element, position },
                    1 => PolicyEdit::Remove { element },
                    _ => PolicyEdit::Reorder { element, position },
                };
                PlayerAction::EditPolicy { edit }
            }
            7 => PlayerAction::SubmitPolicy,
            _ => PlayerAction::RequestHint {
                puzzle: if rng.random_bool(0.9) {
                    s.hints.choose(rng).unwrap().puzzle.clone()
                } else {
                    PuzzleId::new(bogus())
                },
            },
        }
    }
}

impl Player for RandomBot {
    fn next_action(&mut self, state: &SessionState, scenario: &Scenario) -> Option<PlayerAction> {
        if self.cursor < self.script.len() && self.rng.random_bool(self.guided) {
            self.cursor += 1;
            return Some(self.script[self.cursor - 1].clone());
        }
        Some(self.random_action(state, scenario))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayReport {
    pub phase: Phase,
    pub zone_results: Vec<ZoneResult>,
    pub total_score: Option<f64>,
    pub actions: usize,
    pub rejected: usize,
}

/// Drives `player` through an in-process session. Each action advances the
/// clock by `step_secs`; play stops when the session ends, the player runs
/// out of actions, or `max_steps` is reached.
pub fn play(
    scenario: &Scenario,
    player: &mut dyn Player,
    max_steps: usize,
    step_secs: u64,
) -> Result<(PlayReport, Session), SessionError> {
    let mut now = Timestamp(0);
    let mut session = Session::create(scenario, SessionId::new("bot"), now)?;
    let mut report = PlayReport {
        phase: Phase::Lobby,
        zone_results: Vec::new(),
        total_score: None,
        actions: 0,
        rejected: 0,
    };
    while report.actions < max_steps && !session.state().phase.is_terminal() {
        let Some(action) = player.next_action(session.state(), scenario) else {
            break;
        };
        now = now.plus(step_secs);
        let result = session.apply(scenario, &action, now);
        report.actions += 1;
        if result.is_err() {
            report.rejected += 1;
        }
        player.observe(&result);
    }
    let st = session.state();
    report.phase = st.phase;
    report.zone_results = st.zone_results.clone();
    report.total_score = st.total_score;
    Ok((report, session))
}
