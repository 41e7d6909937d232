//! Scenario files, the event store, headless bots, the HTTP gateway and the
//! command-line front end for the govroom escape room.

pub mod bot;
pub mod cli;
pub mod gateway;
pub mod scenario_file;
pub mod telemetry;
