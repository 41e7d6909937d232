//! Append-only telemetry records. One [`GameEvent`] is emitted for session
//! creation, for every accepted or rejected action, and for expiry.

use alloc::format;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::ids::{ScenarioId, SessionId, Timestamp};
use crate::session::{Phase, PlayerAction};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Accepted,
    Rejected { code: String },
}

impl Outcome {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Outcome::Accepted)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventBody {
    Created { scenario_id: ScenarioId },
    Action { action: PlayerAction },
    Expired,
}

impl EventBody {
    /// Variant name recorded in the event's `action` field.
    pub fn name(&self) -> &'static str {
        match self {
            EventBody::Created { .. } => "create",
            EventBody::Action { action } => action.name(),
            EventBody::Expired => "expire",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameEvent {
    pub session_id: SessionId,
    /// Contiguous from 0 within a session.
    pub seq: u64,
    pub timestamp: Timestamp,
    pub action: String,
    pub outcome: Outcome,
    /// Phase when the action arrived.
    pub phase: Phase,
    pub phase_after: Phase,
    /// FNV-1a 64 of the canonical JSON encoding of `body`, as 16 hex digits.
    pub digest: String,
    pub body: EventBody,
}

impl GameEvent {
    pub(crate) fn new(
        session_id: SessionId,
        seq: u64,
        timestamp: Timestamp,
        outcome: Outcome,
        phase: Phase,
        phase_after: Phase,
        body: EventBody,
    ) -> Self {
        GameEvent {
            session_id,
            seq,
            timestamp,
            action: String::from(body.name()),
            outcome,
            phase,
            phase_after,
            digest: digest(&body),
            body,
        }
    }

    pub fn rejection_code(&self) -> Option<&str> {
        match &self.outcome {
            Outcome::Rejected { code } => Some(code),
            Outcome::Accepted => None,
        }
    }
}

pub fn digest(body: &EventBody) -> String {
    let bytes = serde_json::to_vec(body).expect("event bodies always serialize");
    format!("{:016x}", fnv1a64(&bytes))
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
