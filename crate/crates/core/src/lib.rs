//! Game engine for a three-zone cybersecurity governance escape room.
//!
//! Zone 1 is a risk maze (identify and prioritise risks), zone 2 matches
//! security controls to governance frameworks, and zone 3 revises and drafts
//! a policy from a library of vetted elements. Every operation here is a pure
//! function of its inputs; wall-clock time is always passed in explicitly.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, persistence,
//! the HTTP gateway and the CLI live in the `govroom` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod ids;

pub mod analytics;
pub mod event;
pub mod lint;
pub mod matching;
pub mod maze;
pub mod policy;
pub mod scenario;
pub mod session;
pub mod view;

#[cfg(test)]
mod testkit;

pub use event::GameEvent;
pub use ids::*;
pub use scenario::{severity, Scenario, ScenarioDocument, ScenarioError};
pub use session::{
    apply_action, create_session, replay, Phase, PlayerAction, Session, SessionError, SessionState,
};
