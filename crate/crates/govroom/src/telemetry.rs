//! Append-only event log: one JSON record per line, plus an in-memory index.
//!
//! Records are tagged with `"record": "event"` or `"record": "survey"`. On
//! open the whole file is read back and checked for sequence contiguity.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use govroom_core::analytics::SurveyResponse;
use govroom_core::{GameEvent, SessionId};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum Record {
    Event(GameEvent),
    Survey(SurveyResponse),
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("sequence gap for session {session}: expected seq {expected}, got {found}")]
    SequenceGap {
        session: SessionId,
        expected: u64,
        found: u64,
    },
    #[error("timestamp went backwards for session {session} at seq {seq}")]
    TimeTravel { session: SessionId, seq: u64 },
    #[error("session {session} already answered {question} differently")]
    SurveyConflict {
        session: SessionId,
        question: String,
    },
    #[error("{path}:{line}: unreadable record: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("storage failure: {0}")]
    Storage(#[from] io::Error),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::SequenceGap { .. } => "sequence-gap",
            StoreError::TimeTravel { .. } => "sequence-gap",
            StoreError::SurveyConflict { .. } => "survey-conflict",
            StoreError::Corrupt { .. } => "corrupt-log",
            StoreError::Storage(_) => "storage-failure",
        }
    }
}

#[derive(Default)]
struct Index {
    sessions: BTreeMap<SessionId, Vec<GameEvent>>,
    surveys: BTreeMap<(SessionId, String), SurveyResponse>,
}

impl Index {
    fn check_event(&self, e: &GameEvent) -> Result<(), StoreError> {
        let log = self.sessions.get(&e.session_id);
        let expected = log.map_or(0, |l| l.len() as u64);
        if e.seq != expected {
            return Err(StoreError::SequenceGap {
                session: e.session_id.clone(),
                expected,
                found: e.seq,
            });
        }
        if let Some(last) = log.and_then(|l| l.last()) {
            if e.timestamp < last.timestamp {
                return Err(StoreError::TimeTravel {
                    session: e.session_id.clone(),
                    seq: e.seq,
                });
            }
        }
        Ok(())
    }

    /// `Ok(false)` when the identical response is already stored.
    fn check_survey(&self, r: &SurveyResponse) -> Result<bool, StoreError> {
        match self
            .surveys
            .get(&(r.session_id.clone(), r.question.clone()))
        {
            None => Ok(true),
            Some(existing) if existing == r => Ok(false),
            Some(_) => Err(StoreError::SurveyConflict {
                session: r.session_id.clone(),
                question: r.question.clone(),
            }),
        }
    }

    fn insert(&mut self, record: Record) {
        match record {
            Record::Event(e) => self
                .sessions
                .entry(e.session_id.clone())
                .or_default()
                .push(e),
            Record::Survey(r) => {
                self.surveys
                    .insert((r.session_id.clone(), r.question.clone()), r);
            }
        }
    }
}

pub struct EventStore {
    index: RwLock<Index>,
    file: Option<Mutex<File>>,
    sync: bool,
}

impl EventStore {
    /// A store that keeps records in memory only.
    pub fn in_memory() -> Self {
        EventStore {
            index: RwLock::new(Index::default()),
            file: None,
            sync: false,
        }
    }

    /// Opens (creating if needed) a log file and loads its records.
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        let mut index = Index::default();
        if path.exists() {
            let reader = BufReader::new(File::open(path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let corrupt = |message: String| StoreError::Corrupt {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message,
                };
                let record: Record =
                    serde_json::from_str(&line).map_err(|e| corrupt(e.to_string()))?;
                match &record {
                    Record::Event(e) => index.check_event(e),
                    Record::Survey(r) => index.check_survey(r).map(|_| ()),
                }
                .map_err(|e| corrupt(e.to_string()))?;
                index.insert(record);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(EventStore {
            index: RwLock::new(index),
            file: Some(Mutex::new(file)),
            sync: true,
        })
    }

    /// Skips the fsync after each append. Records are still written in order.
    pub fn without_fsync(mut self) -> Self {
        self.sync = false;
        self
    }

    fn write(&self, record: &Record) -> Result<(), StoreError> {
        let Some(file) = &self.file else {
            return Ok(());
        };
        let mut line = serde_json::to_vec(record).map_err(io::Error::from)?;
        line.push(b'\n');
        let mut file = file.lock().unwrap_or_else(|p| p.into_inner());
        file.write_all(&line)?;
        if self.sync {
            file.sync_data()?;
        }
        Ok(())
    }

    pub fn append_event(&self, event: &GameEvent) -> Result<(), StoreError> {
        let mut index = self.index.write().unwrap_or_else(|p| p.into_inner());
        index.check_event(event)?;
        let record = Record::Event(event.clone());
        self.write(&record)?;
        index.insert(record);
        Ok(())
    }

    /// Records a survey answer. Resubmitting the same answer is a no-op
    /// (returns `false`); a different answer to the same question is refused.
    pub fn record_survey(&self, response: &SurveyResponse) -> Result<bool, StoreError> {
        let mut index = self.index.write().unwrap_or_else(|p| p.into_inner());
        if !index.check_survey(response)? {
            return Ok(false);
        }
        let record = Record::Survey(response.clone());
        self.write(&record)?;
        index.insert(record);
        Ok(true)
    }

    pub fn session_log(&self, session: &SessionId) -> Option<Vec<GameEvent>> {
        let index = self.index.read().unwrap_or_else(|p| p.into_inner());
        index.sessions.get(session).cloned()
    }

    pub fn contains_session(&self, session: &SessionId) -> bool {
        let index = self.index.read().unwrap_or_else(|p| p.into_inner());
        index.sessions.contains_key(session)
    }

    /// Every session's log, ordered by session id.
    pub fn logs(&self) -> Vec<Vec<GameEvent>> {
        let index = self.index.read().unwrap_or_else(|p| p.into_inner());
        index.sessions.values().cloned().collect()
    }

    pub fn surveys(&self) -> Vec<SurveyResponse> {
        let index = self.index.read().unwrap_or_else(|p| p.into_inner());
        index.surveys.values().cloned().collect()
    }
}
