//! Session hosting for remote players.
//!
//! Each session sits behind its own async mutex, so actions on one session
//! are applied one at a time while different sessions proceed in parallel.
//! An action is computed against the current state, its event is appended to
//! the store, and only then is the new state committed and broadcast.

mod http;

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use base64::Engine;
use govroom_core::analytics::{self, Answer, CohortReport, SurveyResponse};
use govroom_core::event::Outcome;
use govroom_core::session::Feedback;
use govroom_core::view::{session_view, SessionView};
use govroom_core::*;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use tokio::sync::{broadcast, Mutex};

use crate::telemetry::{EventStore, StoreError};

pub use http::{frame_stream, router, serve};

pub trait Clock: Send + Sync {
    fn now(&self) -> Timestamp;
}

/// Whole seconds since the Unix epoch.
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Timestamp {
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        Timestamp(secs)
    }
}

/// A clock that only moves when told to. Used by tests.
#[derive(Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn new(start: u64) -> Self {
        ManualClock(AtomicU64::new(start))
    }

    pub fn set(&self, secs: u64) {
        self.0.store(secs, Ordering::SeqCst);
    }

    pub fn advance(&self, secs: u64) {
        self.0.fetch_add(secs, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Timestamp {
        Timestamp(self.0.load(Ordering::SeqCst))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: String,
    pub message: String,
    /// Sequence number of the rejection event, when one was logged.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seq: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub view: Option<SessionView>,
}

pub fn status_for(code: &str) -> u16 {
    match code {
        "bad-token" => 401,
        "analytics-disabled" => 403,
        "unknown-session" | "unknown-scenario" => 404,
        "zone-locked"
        | "session-finished"
        | "zone-already-submitted"
        | "zones-not-complete"
        | "session-active"
        | "survey-conflict" => 409,
        "expired" => 410,
        "scenario-invalid" => 422,
        "storage-failure" | "sequence-gap" | "corrupt-log" => 500,
        _ => 400,
    }
}

impl ApiError {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status: status_for(code),
            code: code.to_string(),
            message: message.into(),
            seq: None,
            view: None,
        }
    }

    fn bad_token() -> Self {
        ApiError::new("bad-token", "missing or invalid session token")
    }

    fn unknown_session(id: &SessionId) -> Self {
        ApiError::new("unknown-session", format!("no session {id}"))
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        ApiError::new(e.code(), e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        ApiError::new(e.code(), e.to_string())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    Snapshot,
    Event,
}

/// One server-push message. Every frame carries the full player view, so a
/// client that missed frames can resynchronise from any later one.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Frame {
    pub kind: FrameKind,
    /// Sequence number of the last event reflected in `view`.
    pub seq: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feedback: Option<Feedback>,
    pub view: SessionView,
}

impl Frame {
    pub fn is_terminal(&self) -> bool {
        self.view.phase.is_terminal()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Created {
    pub session_id: SessionId,
    pub token: String,
    pub view: SessionView,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionReply {
    pub seq: u64,
    pub feedback: Feedback,
    pub view: SessionView,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub id: ScenarioId,
    pub title: String,
    pub company_profile: String,
    pub time_limit: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurveyAnswer {
    pub question: String,
    pub answer: Answer,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurveyReply {
    pub recorded: usize,
    pub duplicates: usize,
}

struct Slot {
    token: String,
    scenario: Arc<Scenario>,
    session: Mutex<Session>,
    frames: broadcast::Sender<Frame>,
}

pub struct Gateway {
    scenarios: BTreeMap<ScenarioId, Arc<Scenario>>,
    sessions: RwLock<HashMap<SessionId, Arc<Slot>>>,
    store: Arc<EventStore>,
    clock: Arc<dyn Clock>,
    instructor_token: Option<String>,
}

fn tokens_match(a: &str, b: &str) -> bool {
    a.len() == b.len()
        && a.bytes()
            .zip(b.bytes())
            .fold(0u8, |acc, (x, y)| acc | (x ^ y))
            == 0
}

impl Gateway {
    pub fn new(
        scenarios: Vec<Scenario>,
        store: Arc<EventStore>,
        clock: Arc<dyn Clock>,
        instructor_token: Option<String>,
    ) -> Self {
        Gateway {
            scenarios: scenarios
                .into_iter()
                .map(|s| (s.id.clone(), Arc::new(s)))
                .collect(),
            sessions: RwLock::new(HashMap::new()),
            store,
            clock,
            instructor_token,
        }
    }

    pub fn store(&self) -> &EventStore {
        &self.store
    }

    pub fn now(&self) -> Timestamp {
        self.clock.now()
    }

    pub fn scenarios(&self) -> Vec<ScenarioSummary> {
        self.scenarios
            .values()
            .map(|s| ScenarioSummary {
                id: s.id.clone(),
                title: s.title.clone(),
                company_profile: s.company_profile.clone(),
                time_limit: s.time_limit,
            })
            .collect()
    }

    fn slot(&self, id: &SessionId, token: Option<&str>) -> Result<Arc<Slot>, ApiError> {
        let slot = self
            .sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_session(id))?;
        match token {
            Some(t) if tokens_match(t, &slot.token) => Ok(slot),
            _ => Err(ApiError::bad_token()),
        }
    }

    fn fresh_ids(&self) -> (SessionId, String) {
        let mut rng = rand::rng();
        loop {
            let id = SessionId::new(format!(
                "{:032x}",
                rng.next_u64() as u128 | (u128::from(rng.next_u64()) << 64)
            ));
            let known = self
                .sessions
                .read()
                .unwrap_or_else(|p| p.into_inner())
                .contains_key(&id);
            if known || self.store.contains_session(&id) {
                continue;
            }
            let mut token = [0u8; 16];
            rng.fill_bytes(&mut token);
            return (
                id,
                base64::engine::general_purpose::URL_SAFE_NO_PAD.encode(token),
            );
        }
    }

    pub fn create_session(&self, scenario_id: &ScenarioId) -> Result<Created, ApiError> {
        let scenario = self.scenarios.get(scenario_id).cloned().ok_or_else(|| {
            ApiError::new("unknown-scenario", format!("no scenario {scenario_id}"))
        })?;
        let (id, token) = self.fresh_ids();
        let now = self.clock.now();
        let session = Session::create(&scenario, id.clone(), now)?;
        self.store.append_event(session.creation_event())?;
        let view = session_view(session.state(), &scenario, now);
        let (frames, _) = broadcast::channel(64);
        let slot = Arc::new(Slot {
            token: token.clone(),
            scenario,
            session: Mutex::new(session),
            frames,
        });
        self.sessions
            .write()
            .unwrap_or_else(|p| p.into_inner())
            .insert(id.clone(), slot);
        Ok(Created {
            session_id: id,
            token,
            view,
        })
    }

    pub async fn act(
        &self,
        id: &SessionId,
        token: Option<&str>,
        action: PlayerAction,
    ) -> Result<ActionReply, ApiError> {
        let slot = self.slot(id, token)?;
        let mut session = slot.session.lock().await;
        let now = session.clamp(self.clock.now());
        let transition = session.prepare(&slot.scenario, &action, now);
        self.store.append_event(&transition.event)?;
        let seq = transition.event.seq;
        let outcome = transition.event.outcome.clone();
        let result = session.commit(transition);
        let view = session_view(session.state(), &slot.scenario, now);
        let _ = slot.frames.send(Frame {
            kind: FrameKind::Event,
            seq,
            action: Some(action.name().to_string()),
            outcome: Some(outcome),
            feedback: result.as_ref().ok().cloned(),
            view: view.clone(),
        });
        drop(session);
        match result {
            Ok(feedback) => Ok(ActionReply {
                seq,
                feedback,
                view,
            }),
            Err(e) => {
                let mut err = ApiError::from(e);
                err.seq = Some(seq);
                err.view = Some(view);
                Err(err)
            }
        }
    }

    pub async fn view(&self, id: &SessionId, token: Option<&str>) -> Result<SessionView, ApiError> {
        let slot = self.slot(id, token)?;
        let session = slot.session.lock().await;
        Ok(session_view(
            session.state(),
            &slot.scenario,
            session.clamp(self.clock.now()),
        ))
    }

    /// Live state of a session, for tests and diagnostics.
    pub async fn state(&self, id: &SessionId) -> Option<SessionState> {
        let slot = self
            .sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()?;
        let session = slot.session.lock().await;
        Some(session.state().clone())
    }

    /// The current view plus a receiver for every later frame.
    pub async fn subscribe(
        &self,
        id: &SessionId,
        token: Option<&str>,
    ) -> Result<(Frame, broadcast::Receiver<Frame>), ApiError> {
        let slot = self.slot(id, token)?;
        let session = slot.session.lock().await;
        let rx = slot.frames.subscribe();
        let snapshot = Frame {
            kind: FrameKind::Snapshot,
            seq: session.log().len() as u64 - 1,
            action: None,
            outcome: None,
            feedback: None,
            view: session_view(
                session.state(),
                &slot.scenario,
                session.clamp(self.clock.now()),
            ),
        };
        Ok((snapshot, rx))
    }

    /// Survey answers are accepted once the session has ended.
    pub async fn submit_survey(
        &self,
        id: &SessionId,
        token: Option<&str>,
        answers: Vec<SurveyAnswer>,
    ) -> Result<SurveyReply, ApiError> {
        let slot = self.slot(id, token)?;
        let session = slot.session.lock().await;
        if !session.state().phase.is_terminal() {
            return Err(ApiError::new(
                "session-active",
                "surveys open once the session has ended",
            ));
        }
        let responses: Vec<SurveyResponse> = answers
            .into_iter()
            .map(|a| SurveyResponse {
                session_id: id.clone(),
                question: a.question,
                answer: a.answer,
            })
            .collect();
        for r in &responses {
            r.validate()
                .map_err(|e| ApiError::new("invalid-survey", e.to_string()))?;
        }
        let mut reply = SurveyReply {
            recorded: 0,
            duplicates: 0,
        };
        for r in &responses {
            if self.store.record_survey(r)? {
                reply.recorded += 1;
            } else {
                reply.duplicates += 1;
            }
        }
        Ok(reply)
    }

    pub fn analytics(&self, bearer: Option<&str>) -> Result<CohortReport, ApiError> {
        let Some(expected) = &self.instructor_token else {
            return Err(ApiError::new(
                "analytics-disabled",
                "no instructor token configured",
            ));
        };
        if !bearer.is_some_and(|b| tokens_match(b, expected)) {
            return Err(ApiError::bad_token());
        }
        let scenarios: Vec<Scenario> = self.scenarios.values().map(|s| (**s).clone()).collect();
        analytics::cohort_report(&self.store.logs(), &scenarios, &self.store.surveys())
            .map_err(|e| ApiError::new(e.code(), e.to_string()))
    }

    /// Expires every overdue session. Returns how many were expired.
    pub async fn sweep_expired(&self) -> Result<usize, ApiError> {
        let slots: Vec<Arc<Slot>> = self
            .sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .values()
            .cloned()
            .collect();
        let mut expired = 0;
        for slot in slots {
            let mut session = slot.session.lock().await;
            let Some(exp) = session.prepare_expiry(self.clock.now()) else {
                continue;
            };
            self.store.append_event(&exp.1)?;
            let seq = exp.1.seq;
            let now = exp.1.timestamp;
            session.commit_expiry(exp);
            expired += 1;
            let _ = slot.frames.send(Frame {
                kind: FrameKind::Event,
                seq,
                action: Some("expire".to_string()),
                outcome: Some(Outcome::Accepted),
                feedback: None,
                view: session_view(session.state(), &slot.scenario, now),
            });
        }
        Ok(expired)
    }
}
