//! Scene flow: the session state machine.
//!
//! A session moves lobby → zone1 → zone2 → zone3 → completed, and can expire
//! from any non-terminal phase once the deadline passes. Actions are routed to
//! the engine for the current zone only. Every call to [`apply_action`] yields
//! exactly one [`GameEvent`], whether the action was accepted or rejected, so
//! the event log can be folded back into the same state by [`replay`].

use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::event::{EventBody, GameEvent, Outcome};
use crate::ids::*;
use crate::lint::lint_scenario;
use crate::matching::{self, MatchError, MatchResult, MatchState};
use crate::maze::{self, MazeError, MazeState, RankingResult};
use crate::policy::{self, GapReport, PolicyEdit, PolicyError, PolicyResult, PolicyState};
use crate::scenario::{Scenario, ZoneKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Lobby,
    Zone1,
    Zone2,
    Zone3,
    Completed,
    Expired,
}

impl Phase {
    pub fn zone(self) -> Option<ZoneKind> {
        match self {
            Phase::Zone1 => Some(ZoneKind::Maze),
            Phase::Zone2 => Some(ZoneKind::Matching),
            Phase::Zone3 => Some(ZoneKind::Policy),
            _ => None,
        }
    }

    pub fn for_zone(zone: ZoneKind) -> Phase {
        match zone {
            ZoneKind::Maze => Phase::Zone1,
            ZoneKind::Matching => Phase::Zone2,
            ZoneKind::Policy => Phase::Zone3,
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, Phase::Completed | Phase::Expired)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Lobby => "lobby",
            Phase::Zone1 => "zone1",
            Phase::Zone2 => "zone2",
            Phase::Zone3 => "zone3",
            Phase::Completed => "completed",
            Phase::Expired => "expired",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PlayerAction {
    Start,
    Move {
        to: NodeId,
    },
    FlagRisk {
        risk: RiskId,
        decision: bool,
    },
    SubmitRanking {
        ordered: Vec<RiskId>,
    },
    Assign {
        control: ControlId,
        frameworks: BTreeSet<FrameworkId>,
    },
    SubmitMatching,
    EditPolicy {
        edit: PolicyEdit,
    },
    SubmitPolicy,
    RequestHint {
        puzzle: PuzzleId,
    },
}

impl PlayerAction {
    pub fn name(&self) -> &'static str {
        match self {
            PlayerAction::Start => "start",
            PlayerAction::Move { .. } => "move",
            PlayerAction::FlagRisk { .. } => "flag_risk",
            PlayerAction::SubmitRanking { .. } => "submit_ranking",
            PlayerAction::Assign { .. } => "assign",
            PlayerAction::SubmitMatching => "submit_matching",
            PlayerAction::EditPolicy { .. } => "edit_policy",
            PlayerAction::SubmitPolicy => "submit_policy",
            PlayerAction::RequestHint { .. } => "request_hint",
        }
    }

    pub fn is_submit(&self) -> bool {
        matches!(
            self,
            PlayerAction::SubmitRanking { .. }
                | PlayerAction::SubmitMatching
                | PlayerAction::SubmitPolicy
        )
    }

    /// Phase the action is addressed to.
    fn target(&self, scenario: &Scenario) -> Result<Phase, SessionError> {
        Ok(match self {
            PlayerAction::Start => Phase::Lobby,
            PlayerAction::Move { .. }
            | PlayerAction::FlagRisk { .. }
            | PlayerAction::SubmitRanking { .. } => Phase::Zone1,
            PlayerAction::Assign { .. } | PlayerAction::SubmitMatching => Phase::Zone2,
            PlayerAction::EditPolicy { .. } | PlayerAction::SubmitPolicy => Phase::Zone3,
            PlayerAction::RequestHint { puzzle } => {
                let hints = scenario
                    .hint_set(puzzle)
                    .ok_or_else(|| SessionError::UnknownPuzzle(puzzle.clone()))?;
                Phase::for_zone(hints.zone)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneResult {
    pub zone_index: u8,
    /// Raw score from the zone engine.
    pub zone_score: f64,
    /// `zone_score` after hint penalties, floored at 0.
    pub penalized_score: f64,
    pub passed: bool,
    /// Seconds from entering the zone to submitting it.
    pub duration: u64,
    pub hints_used: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: SessionId,
    pub scenario_id: ScenarioId,
    pub phase: Phase,
    pub maze: MazeState,
    pub matching: MatchState,
    pub policy: PolicyState,
    /// One entry per passed zone, in zone order.
    pub zone_results: Vec<ZoneResult>,
    pub hints_used: BTreeMap<PuzzleId, u32>,
    pub created_at: Timestamp,
    pub deadline: Timestamp,
    pub zone_entered_at: Option<Timestamp>,
    pub total_score: Option<f64>,
}

impl SessionState {
    pub fn remaining_seconds(&self, now: Timestamp) -> u64 {
        if self.phase.is_terminal() {
            0
        } else {
            self.deadline.since(now)
        }
    }

    pub fn hints_in_zone(&self, scenario: &Scenario, zone: ZoneKind) -> u32 {
        self.hints_used
            .iter()
            .filter(|(p, _)| scenario.hint_set(p).is_some_and(|h| h.zone == zone))
            .map(|(_, n)| *n)
            .sum()
    }
}

/// Immediate response to an accepted action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Feedback {
    Ack,
    Ranking {
        result: RankingResult,
    },
    Matching {
        result: MatchResult,
    },
    Gaps {
        report: GapReport,
    },
    Policy {
        result: PolicyResult,
    },
    Hint {
        puzzle: PuzzleId,
        tier: usize,
        text: String,
    },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SessionError {
    #[error("action targets {target}, but the session is in {current}")]
    ZoneLocked { current: Phase, target: Phase },
    #[error("session expired")]
    Expired,
    #[error("session already completed")]
    Finished,
    #[error("scenario failed lint: {0}")]
    ScenarioInvalid(String),
    #[error("unknown puzzle {0}")]
    UnknownPuzzle(PuzzleId),
    #[error("no more hints for {0}")]
    NoMoreHints(PuzzleId),
    #[error(transparent)]
    Maze(#[from] MazeError),
    #[error(transparent)]
    Matching(#[from] MatchError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

impl core::fmt::Display for Phase {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl SessionError {
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::ZoneLocked { .. } => "zone-locked",
            SessionError::Expired => "expired",
            SessionError::Finished => "session-finished",
            SessionError::ScenarioInvalid(_) => "scenario-invalid",
            SessionError::UnknownPuzzle(_) => "unknown-puzzle",
            SessionError::NoMoreHints(_) => "no-more-hints",
            SessionError::Maze(e) => e.code(),
            SessionError::Matching(e) => e.code(),
            SessionError::Policy(e) => e.code(),
        }
    }
}

/// Outcome of applying one action: the next state and its event.
/// On rejection `state` equals the input state, except that a deadline
/// overrun moves it to [`Phase::Expired`].
#[derive(Debug, Clone)]
pub struct Transition {
    pub state: SessionState,
    pub event: GameEvent,
    pub result: Result<Feedback, SessionError>,
}

/// Opens a session in the lobby. The scenario must lint clean.
pub fn create_session(
    scenario: &Scenario,
    session_id: SessionId,
    now: Timestamp,
) -> Result<(SessionState, GameEvent), SessionError> {
    let report = lint_scenario(scenario);
    if !report.pass {
        let codes: Vec<&str> = report.errors().map(|f| f.code.as_str()).collect();
        return Err(SessionError::ScenarioInvalid(codes.join(", ")));
    }
    let state = fresh_state(scenario, session_id, now);
    let event = GameEvent::new(
        state.session_id.clone(),
        0,
        now,
        Outcome::Accepted,
        Phase::Lobby,
        Phase::Lobby,
        EventBody::Created {
            scenario_id: scenario.id.clone(),
        },
    );
    Ok((state, event))
}

fn fresh_state(scenario: &Scenario, session_id: SessionId, now: Timestamp) -> SessionState {
    SessionState {
        session_id,
        scenario_id: scenario.id.clone(),
        phase: Phase::Lobby,
        maze: MazeState::new(&scenario.maze),
        matching: MatchState::default(),
        policy: PolicyState::new(&scenario.policy),
        zone_results: Vec::new(),
        hints_used: BTreeMap::new(),
        created_at: now,
        deadline: now.plus(scenario.time_limit),
        zone_entered_at: None,
        total_score: None,
    }
}

/// Applies one action. Pure: identical inputs give identical outputs.
pub fn apply_action(
    state: &SessionState,
    scenario: &Scenario,
    action: &PlayerAction,
    now: Timestamp,
    seq: u64,
) -> Transition {
    let (next, result) = match step(state, scenario, action, now) {
        Ok((next, feedback)) => (next, Ok(feedback)),
        Err(err) => {
            let mut unchanged = state.clone();
            if matches!(err, SessionError::Expired) && !state.phase.is_terminal() {
                unchanged.phase = Phase::Expired;
            }
            (unchanged, Err(err))
        }
    };
    let outcome = match &result {
        Ok(_) => Outcome::Accepted,
        Err(e) => Outcome::Rejected {
            code: String::from(e.code()),
        },
    };
    let event = GameEvent::new(
        state.session_id.clone(),
        seq,
        now,
        outcome,
        state.phase,
        next.phase,
        EventBody::Action {
            action: action.clone(),
        },
    );
    Transition {
        state: next,
        event,
        result,
    }
}

/// Moves an overdue session to [`Phase::Expired`] without a player action.
pub fn expire_if_due(
    state: &SessionState,
    now: Timestamp,
    seq: u64,
) -> Option<(SessionState, GameEvent)> {
    if state.phase.is_terminal() || now <= state.deadline {
        return None;
    }
    let mut next = state.clone();
    next.phase = Phase::Expired;
    let event = GameEvent::new(
        state.session_id.clone(),
        seq,
        now,
        Outcome::Accepted,
        state.phase,
        Phase::Expired,
        EventBody::Expired,
    );
    Some((next, event))
}

fn step(
    state: &SessionState,
    scenario: &Scenario,
    action: &PlayerAction,
    now: Timestamp,
) -> Result<(SessionState, Feedback), SessionError> {
    match state.phase {
        Phase::Expired => return Err(SessionError::Expired),
        Phase::Completed => return Err(SessionError::Finished),
        _ => {}
    }
    if now > state.deadline {
        return Err(SessionError::Expired);
    }
    let target = action.target(scenario)?;
    if target != state.phase {
        return Err(SessionError::ZoneLocked {
            current: state.phase,
            target,
        });
    }

    let mut next = state.clone();
    let feedback = match action {
        PlayerAction::Start => {
            next.phase = Phase::Zone1;
            next.zone_entered_at = Some(now);
            Feedback::Ack
        }
        PlayerAction::Move { to } => {
            next.maze = maze::move_to(&state.maze, to, &scenario.maze)?;
            Feedback::Ack
        }
        PlayerAction::FlagRisk { risk, decision } => {
            next.maze = maze::flag_risk(&state.maze, risk, *decision, &scenario.maze)?;
            Feedback::Ack
        }
        PlayerAction::SubmitRanking { ordered } => {
            let (maze_state, result) = maze::submit_ranking(&state.maze, ordered, scenario)?;
            next.maze = maze_state;
            finish_zone(
                &mut next,
                scenario,
                ZoneKind::Maze,
                result.zone_score,
                result.passed,
                now,
            );
            Feedback::Ranking { result }
        }
        PlayerAction::Assign {
            control,
            frameworks,
        } => {
            next.matching =
                matching::assign(&state.matching, control, frameworks, &scenario.matching)?;
            Feedback::Ack
        }
        PlayerAction::SubmitMatching => {
            let (match_state, result) = matching::score_matching(&state.matching, scenario)?;
            next.matching = match_state;
            finish_zone(
                &mut next,
                scenario,
                ZoneKind::Matching,
                result.zone_score,
                result.passed,
                now,
            );
            Feedback::Matching { result }
        }
        PlayerAction::EditPolicy { edit } => {
            next.policy = policy::edit_policy(&state.policy, edit, &scenario.policy)?;
            let report =
                policy::evaluate_policy(&next.policy, &next.maze, &next.matching, scenario)?;
            Feedback::Gaps { report }
        }
        PlayerAction::SubmitPolicy => {
            let (policy_state, result) =
                policy::submit_policy(&state.policy, &state.maze, &state.matching, scenario)?;
            next.policy = policy_state;
            finish_zone(
                &mut next,
                scenario,
                ZoneKind::Policy,
                result.zone_score,
                result.passed,
                now,
            );
            Feedback::Policy { result }
        }
        PlayerAction::RequestHint { puzzle } => {
            let (text, tier) = reveal_hint(&mut next, scenario, puzzle)?;
            Feedback::Hint {
                puzzle: puzzle.clone(),
                tier,
                text,
            }
        }
    };
    Ok((next, feedback))
}

fn reveal_hint(
    state: &mut SessionState,
    scenario: &Scenario,
    puzzle: &PuzzleId,
) -> Result<(String, usize), SessionError> {
    let hints = scenario
        .hint_set(puzzle)
        .ok_or_else(|| SessionError::UnknownPuzzle(puzzle.clone()))?;
    let used = state.hints_used.get(puzzle).copied().unwrap_or(0) as usize;
    let text = hints
        .tiers
        .get(used)
        .ok_or_else(|| SessionError::NoMoreHints(puzzle.clone()))?;
    state.hints_used.insert(puzzle.clone(), used as u32 + 1);
    Ok((text.clone(), used + 1))
}

/// Hint-penalised contribution of a zone, floored at 0.
pub fn penalized(raw: f64, hints: u32, penalty: f64) -> f64 {
    (raw - penalty * f64::from(hints)).max(0.0)
}

/// Weighted mean of the penalised zone scores, in `[0, 1]`.
pub fn total_score(results: &[ZoneResult], scenario: &Scenario) -> f64 {
    let weights = scenario.scoring.zone_weights;
    let mut sum = 0.0;
    let mut weight = 0.0;
    for r in results {
        let w = weights[r.zone_index as usize];
        sum += w * r.penalized_score;
        weight += w;
    }
    if weight == 0.0 {
        return 0.0;
    }
    (sum / weight).clamp(0.0, 1.0)
}

fn finish_zone(
    state: &mut SessionState,
    scenario: &Scenario,
    zone: ZoneKind,
    score: f64,
    passed: bool,
    now: Timestamp,
) {
    if !passed {
        return;
    }
    let hints = state.hints_in_zone(scenario, zone);
    state.zone_results.push(ZoneResult {
        zone_index: zone.index() as u8,
        zone_score: score,
        penalized_score: penalized(score, hints, scenario.scoring.hint_penalty),
        passed,
        duration: state
            .zone_entered_at
            .map_or(0, |entered| now.since(entered)),
        hints_used: hints,
    });
    state.phase = match zone {
        ZoneKind::Maze => Phase::Zone2,
        ZoneKind::Matching => Phase::Zone3,
        ZoneKind::Policy => Phase::Completed,
    };
    if state.phase == Phase::Completed {
        state.zone_entered_at = None;
        state.total_score = Some(total_score(&state.zone_results, scenario));
    } else {
        state.zone_entered_at = Some(now);
    }
}

/// Requests the next hint tier for `puzzle`, returning the revealed text.
pub fn request_hint(
    state: &SessionState,
    scenario: &Scenario,
    puzzle: &PuzzleId,
    now: Timestamp,
    seq: u64,
) -> (Transition, Option<String>) {
    let t = apply_action(
        state,
        scenario,
        &PlayerAction::RequestHint {
            puzzle: puzzle.clone(),
        },
        now,
        seq,
    );
    let text = match &t.result {
        Ok(Feedback::Hint { text, .. }) => Some(text.clone()),
        _ => None,
    };
    (t, text)
}

/// Actions that play the scenario's reference solutions from the lobby to
/// completion. Policy edits turn the existing policy into the reference one.
pub fn reference_script(s: &Scenario) -> Vec<PlayerAction> {
    let sol = &s.reference_solutions;
    let mut out = alloc::vec![PlayerAction::Start];
    for node in &sol.maze.path[1..] {
        out.push(PlayerAction::Move { to: node.clone() });
        if let Some(risk) = s.maze.node(node).and_then(|n| n.encounter.clone()) {
            if let Some(decision) = sol.maze.flags.get(&risk) {
                out.push(PlayerAction::FlagRisk {
                    risk,
                    decision: *decision,
                });
            }
        }
    }
    out.push(PlayerAction::SubmitRanking {
        ordered: sol.maze.ranking.clone(),
    });
    for (control, frameworks) in &sol.matching.assignments {
        out.push(PlayerAction::Assign {
            control: control.clone(),
            frameworks: frameworks.clone(),
        });
    }
    out.push(PlayerAction::SubmitMatching);
    for e in &s.policy.existing_policy {
        if !sol.policy.selected.contains(e) {
            out.push(PlayerAction::EditPolicy {
                edit: PolicyEdit::Remove { element: e.clone() },
            });
        }
    }
    let mut current: Vec<ElementId> = s
        .policy
        .existing_policy
        .iter()
        .filter(|e| sol.policy.selected.contains(e))
        .cloned()
        .collect();
    for (i, e) in sol.policy.selected.iter().enumerate() {
        if let Some(pos) = current.iter().position(|c| c == e) {
            if pos != i {
                out.push(PlayerAction::EditPolicy {
                    edit: PolicyEdit::Reorder {
                        element: e.clone(),
                        position: i,
                    },
                });
                let moved = current.remove(pos);
                current.insert(i, moved);
            }
        } else {
            out.push(PlayerAction::EditPolicy {
                edit: PolicyEdit::Add {
                    element: e.clone(),
                    position: i,
                },
            });
            current.insert(i, e.clone());
        }
    }
    out.push(PlayerAction::SubmitPolicy);
    out
}

/// A live session plus its event log, with a prepare/commit split so callers
/// can persist the event before the state change becomes visible.
#[derive(Debug, Clone)]
pub struct Session {
    state: SessionState,
    log: Vec<GameEvent>,
}

impl Session {
    pub fn create(
        scenario: &Scenario,
        session_id: SessionId,
        now: Timestamp,
    ) -> Result<Session, SessionError> {
        let (state, event) = create_session(scenario, session_id, now)?;
        Ok(Session {
            state,
            log: alloc::vec![event],
        })
    }

    /// Rebuilds a session from a complete log.
    pub fn restore(events: Vec<GameEvent>, scenario: &Scenario) -> Result<Session, ReplayError> {
        let state = replay(&events, scenario)?;
        Ok(Session { state, log: events })
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn log(&self) -> &[GameEvent] {
        &self.log
    }

    pub fn creation_event(&self) -> &GameEvent {
        &self.log[0]
    }

    fn next_seq(&self) -> u64 {
        self.log.len() as u64
    }

    /// Event timestamps never go backwards: `now` is clamped to the last one.
    pub fn clamp(&self, now: Timestamp) -> Timestamp {
        let last = self.log.last().map_or(now, |e| e.timestamp);
        now.max(last)
    }

    pub fn prepare(
        &self,
        scenario: &Scenario,
        action: &PlayerAction,
        now: Timestamp,
    ) -> Transition {
        apply_action(
            &self.state,
            scenario,
            action,
            self.clamp(now),
            self.next_seq(),
        )
    }

    pub fn prepare_expiry(&self, now: Timestamp) -> Option<(SessionState, GameEvent)> {
        expire_if_due(&self.state, self.clamp(now), self.next_seq())
    }

    pub fn commit(&mut self, transition: Transition) -> Result<Feedback, SessionError> {
        debug_assert_eq!(transition.event.seq, self.next_seq());
        self.state = transition.state;
        self.log.push(transition.event);
        transition.result
    }

    pub fn commit_expiry(&mut self, (state, event): (SessionState, GameEvent)) {
        debug_assert_eq!(event.seq, self.next_seq());
        self.state = state;
        self.log.push(event);
    }

    pub fn apply(
        &mut self,
        scenario: &Scenario,
        action: &PlayerAction,
        now: Timestamp,
    ) -> Result<Feedback, SessionError> {
        let t = self.prepare(scenario, action, now);
        self.commit(t)
    }

    pub fn expire_if_due(&mut self, now: Timestamp) -> bool {
        match self.prepare_expiry(now) {
            Some(exp) => {
                self.commit_expiry(exp);
                true
            }
            None => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReplayError {
    #[error("event log is empty; it must start with the session's creation event")]
    Empty,
    #[error("corrupt log at seq {seq}: {reason}")]
    CorruptLog { seq: u64, reason: String },
}

impl ReplayError {
    pub fn code(&self) -> &'static str {
        "corrupt-log"
    }

    fn corrupt(seq: u64, reason: impl Into<String>) -> Self {
        ReplayError::CorruptLog {
            seq,
            reason: reason.into(),
        }
    }
}

/// Incremental log fold; [`replay`] drives one of these over a whole log.
#[derive(Debug, Clone)]
pub struct Replayer<'a> {
    scenario: &'a Scenario,
    state: SessionState,
    next_seq: u64,
    last_timestamp: Timestamp,
}

impl<'a> Replayer<'a> {
    pub fn start(first: &GameEvent, scenario: &'a Scenario) -> Result<Self, ReplayError> {
        if first.seq != 0 {
            return Err(ReplayError::corrupt(first.seq, "log must start at seq 0"));
        }
        match &first.body {
            EventBody::Created { scenario_id } if scenario_id == &scenario.id => {}
            EventBody::Created { scenario_id } => {
                return Err(ReplayError::corrupt(
                    0,
                    format!("log belongs to scenario {scenario_id}, not {}", scenario.id),
                ))
            }
            _ => {
                return Err(ReplayError::corrupt(
                    0,
                    "first event is not a creation event",
                ))
            }
        }
        let (state, event) = create_session(scenario, first.session_id.clone(), first.timestamp)
            .map_err(|e| ReplayError::corrupt(0, format!("{e}")))?;
        if &event != first {
            return Err(ReplayError::corrupt(0, "creation event does not reproduce"));
        }
        Ok(Replayer {
            scenario,
            state,
            next_seq: 1,
            last_timestamp: first.timestamp,
        })
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn into_state(self) -> SessionState {
        self.state
    }

    pub fn apply(&mut self, event: &GameEvent) -> Result<&SessionState, ReplayError> {
        let seq = event.seq;
        if seq != self.next_seq {
            return Err(ReplayError::corrupt(
                seq,
                format!("expected seq {}", self.next_seq),
            ));
        }
        if event.session_id != self.state.session_id {
            return Err(ReplayError::corrupt(
                seq,
                "event belongs to another session",
            ));
        }
        if event.timestamp < self.last_timestamp {
            return Err(ReplayError::corrupt(seq, "timestamp went backwards"));
        }
        let (state, produced) = match &event.body {
            EventBody::Action { action } => {
                let t = apply_action(&self.state, self.scenario, action, event.timestamp, seq);
                (t.state, t.event)
            }
            EventBody::Expired => expire_if_due(&self.state, event.timestamp, seq)
                .ok_or_else(|| ReplayError::corrupt(seq, "expiry recorded before the deadline"))?,
            EventBody::Created { .. } => {
                return Err(ReplayError::corrupt(seq, "duplicate creation event"))
            }
        };
        if &produced != event {
            return Err(ReplayError::corrupt(
                seq,
                format!(
                    "{} does not reproduce: recorded {:?} in {}, replayed {:?} in {}",
                    event.action, event.outcome, event.phase, produced.outcome, produced.phase
                ),
            ));
        }
        self.state = state;
        self.next_seq += 1;
        self.last_timestamp = event.timestamp;
        Ok(&self.state)
    }
}

/// Folds a log (creation event first) back into the session state.
pub fn replay(events: &[GameEvent], scenario: &Scenario) -> Result<SessionState, ReplayError> {
    let (first, rest) = events.split_first().ok_or(ReplayError::Empty)?;
    let mut replayer = Replayer::start(first, scenario)?;
    for event in rest {
        replayer.apply(event)?;
    }
    Ok(replayer.into_state())
}
