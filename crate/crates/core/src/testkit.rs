//! Shared fixtures for unit tests.

use crate::scenario::{Scenario, ScenarioDocument};

const REFERENCE: &str = include_str!("../../../scenarios/reference.json");

/// The inner `scenario` object of the bundled reference file.
pub fn reference_json() -> serde_json::Value {
    let file: serde_json::Value = serde_json::from_str(REFERENCE).expect("reference file is JSON");
    file["scenario"].clone()
}

pub fn reference() -> Scenario {
    let doc: ScenarioDocument = serde_json::from_value(reference_json()).expect("schema");
    Scenario::from_document(doc).expect("reference scenario resolves")
}

pub fn from_json(value: serde_json::Value) -> Scenario {
    let doc: ScenarioDocument = serde_json::from_value(value).expect("schema");
    Scenario::from_document(doc).expect("scenario resolves")
}
