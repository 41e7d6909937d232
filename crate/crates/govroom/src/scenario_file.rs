//! Scenario files: a JSON envelope `{"format_version": 1, "scenario": {...}}`.

use std::fs;
use std::path::{Path, PathBuf};

use govroom_core::{Scenario, ScenarioDocument, ScenarioError};
use serde::{Deserialize, Serialize};
use serde_json::error::Category;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope<T> {
    format_version: u32,
    scenario: T,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("unsupported format_version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error(transparent)]
    Invalid(#[from] ScenarioError),
}

impl ScenarioFileError {
    pub fn code(&self) -> &'static str {
        match self {
            ScenarioFileError::Io { .. } => "io",
            ScenarioFileError::Syntax { .. } => "syntax",
            ScenarioFileError::Schema { .. } | ScenarioFileError::Version(_) => "schema",
            ScenarioFileError::Invalid(ScenarioError::Schema { .. }) => "schema",
            ScenarioFileError::Invalid(ScenarioError::DanglingReference { .. }) => {
                "dangling-reference"
            }
        }
    }
}

/// Prefixes serde paths so they read like the ones the validator reports.
fn display_path(path: &serde_path_to_error::Path) -> String {
    let p = path.to_string();
    if p == "." || p.is_empty() {
        "(root)".to_string()
    } else {
        p
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioFileError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let envelope: Envelope<ScenarioDocument> =
        serde_path_to_error::deserialize(de).map_err(|err| {
            let path = display_path(err.path());
            let inner = err.into_inner();
            match inner.classify() {
                Category::Syntax | Category::Eof | Category::Io => ScenarioFileError::Syntax {
                    line: inner.line(),
                    column: inner.column(),
                    message: strip_position(&inner.to_string()),
                },
                Category::Data => ScenarioFileError::Schema {
                    path,
                    message: strip_position(&inner.to_string()),
                },
            }
        })?;
    if envelope.format_version != FORMAT_VERSION {
        return Err(ScenarioFileError::Version(envelope.format_version));
    }
    Ok(Scenario::from_document(envelope.scenario)?)
}

fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(i) => message[..i].to_string(),
        None => message.to_string(),
    }
}

/// Canonical pretty-printed file text; parses back to an equal scenario.
pub fn print_scenario(scenario: &Scenario) -> String {
    let envelope = Envelope {
        format_version: FORMAT_VERSION,
        scenario: scenario.to_document(),
    };
    let mut text = serde_json::to_string_pretty(&envelope).expect("scenarios always serialize");
    text.push('\n');
    text
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioFileError> {
    let text = fs::read_to_string(path).map_err(|source| ScenarioFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text)
}

/// Loads every `*.json` file directly inside `dir`, sorted by file name.
pub fn load_dir(dir: &Path) -> anyhow::Result<Vec<Scenario>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| anyhow::anyhow!("cannot read scenario directory {}: {e}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| load_scenario(p).map_err(|e| anyhow::anyhow!("{}: {e}", p.display())))
        .collect()
}
