//! Session state and its on-disk layout.
//!
//! Each session lives in `<data_dir>/sessions/<id>/` as `deck.json`,
//! `meta.json` and an append-only `labels.jsonl`. The cursor is not stored:
//! it always equals the number of recorded labels.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use rankbins::study::{read_labels, DisplayItem, LabelLog, LabelRecord, StudyDeck};
use rankbins::Verdict;
use serde::{Deserialize, Serialize};

use crate::error::{ServiceError, ServiceResult};

const DECK_FILE: &str = "deck.json";
const META_FILE: &str = "meta.json";
const LABELS_FILE: &str = "labels.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub session_id: String,
    pub labeler_id: String,
    /// RFC 3339 creation time.
    pub created_at: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub progress: usize,
    pub total: usize,
    pub done: bool,
}

#[derive(Debug)]
pub struct Session {
    meta: SessionMeta,
    deck: Arc<StudyDeck>,
    labels: Vec<LabelRecord>,
    log: LabelLog,
}

impl Session {
    pub fn meta(&self) -> &SessionMeta {
        &self.meta
    }

    pub fn deck(&self) -> &Arc<StudyDeck> {
        &self.deck
    }

    pub fn labels(&self) -> &[LabelRecord] {
        &self.labels
    }

    pub fn cursor(&self) -> usize {
        self.labels.len()
    }

    pub fn progress(&self) -> Progress {
        let total = self.deck.len();
        Progress { progress: self.cursor(), total, done: self.cursor() == total }
    }

    /// The item at the cursor, without its category.
    pub fn next_item(&self) -> Option<DisplayItem> {
        self.deck.items().get(self.cursor()).map(|item| item.display())
    }

    /// Records `verdict` for the item at the cursor.
    ///
    /// Resending the most recent label with the same verdict is acknowledged
    /// without writing anything.
    pub fn submit(&mut self, histogram_id: u32, verdict: Verdict, timestamp: String) -> ServiceResult<Progress> {
        if let Some(last) = self.labels.last() {
            if last.histogram_id == histogram_id && last.verdict == verdict {
                return Ok(self.progress());
            }
        }
        let expected = self.deck.items().get(self.cursor()).map(|item| item.id);
        if expected != Some(histogram_id) {
            return Err(ServiceError::OutOfOrder { expected, got: histogram_id });
        }
        let record = LabelRecord { histogram_id, verdict, labeler_id: self.meta.labeler_id.clone(), timestamp };
        self.log.append(&record)?;
        self.labels.push(record);
        Ok(self.progress())
    }
}

/// All sessions known to the service, keyed by id.
#[derive(Debug)]
pub struct Registry {
    root: PathBuf,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

impl Registry {
    /// Opens the registry under `data_dir`, reloading every stored session.
    pub fn open(data_dir: impl AsRef<Path>) -> ServiceResult<Self> {
        let root = data_dir.as_ref().join("sessions");
        fs::create_dir_all(&root).map_err(rankbins::Error::from)?;
        let mut sessions = HashMap::new();
        for entry in fs::read_dir(&root).map_err(rankbins::Error::from)? {
            let dir = entry.map_err(rankbins::Error::from)?.path();
            if !dir.is_dir() {
                continue;
            }
            match load_session(&dir) {
                Ok(session) => {
                    sessions.insert(session.meta.session_id.clone(), Arc::new(Mutex::new(session)));
                }
                Err(e) => tracing::warn!(dir = %dir.display(), error = %e, "skipping unreadable session"),
            }
        }
        tracing::info!(count = sessions.len(), "loaded sessions");
        Ok(Registry { root, sessions: RwLock::new(sessions) })
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("registry lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, id: &str) -> ServiceResult<Arc<Mutex<Session>>> {
        self.sessions
            .read()
            .expect("registry lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    /// Persists a new session over `deck` and registers it.
    pub fn create(&self, deck: StudyDeck, labeler_id: String, created_at: String) -> ServiceResult<Arc<Mutex<Session>>> {
        let session_id = uuid::Uuid::new_v4().simple().to_string();
        let dir = self.root.join(&session_id);
        fs::create_dir(&dir).map_err(rankbins::Error::from)?;
        deck.save(dir.join(DECK_FILE))?;
        let meta = SessionMeta { session_id: session_id.clone(), labeler_id, created_at };
        write_json(&dir.join(META_FILE), &meta)?;
        let log = LabelLog::open(dir.join(LABELS_FILE))?;
        let session = Arc::new(Mutex::new(Session { meta, deck: Arc::new(deck), labels: Vec::new(), log }));
        self.sessions.write().expect("registry lock").insert(session_id, session.clone());
        Ok(session)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> ServiceResult<()> {
    let tmp = path.with_extension("tmp");
    let mut file = fs::File::create(&tmp).map_err(rankbins::Error::from)?;
    serde_json::to_writer_pretty(&mut file, value).map_err(rankbins::Error::from)?;
    file.write_all(b"\n").map_err(rankbins::Error::from)?;
    file.sync_all().map_err(rankbins::Error::from)?;
    fs::rename(&tmp, path).map_err(rankbins::Error::from)?;
    Ok(())
}

fn load_session(dir: &Path) -> ServiceResult<Session> {
    let meta: SessionMeta = serde_json::from_slice(&fs::read(dir.join(META_FILE)).map_err(rankbins::Error::from)?)
        .map_err(rankbins::Error::from)?;
    let deck = StudyDeck::load(dir.join(DECK_FILE))?;
    let labels_path = dir.join(LABELS_FILE);
    let labels = if labels_path.exists() { read_labels(&labels_path)? } else { Vec::new() };
    if labels.len() > deck.len() {
        return Err(ServiceError::Internal(format!("{} labels for a deck of {}", labels.len(), deck.len())));
    }
    for (record, item) in labels.iter().zip(deck.items()) {
        if record.histogram_id != item.id {
            return Err(ServiceError::Internal(format!(
                "label for histogram {} recorded where {} was expected",
                record.histogram_id, item.id
            )));
        }
    }
    // A torn final line would corrupt the next append, so rewrite the log
    // with the records that survived.
    let raw = fs::read(&labels_path).unwrap_or_default();
    if !raw.is_empty() && raw.last() != Some(&b'\n') {
        let mut clean = Vec::new();
        for record in &labels {
            clean.extend(serde_json::to_vec(record).map_err(rankbins::Error::from)?);
            clean.push(b'\n');
        }
        let tmp = labels_path.with_extension("tmp");
        fs::write(&tmp, clean).map_err(rankbins::Error::from)?;
        fs::rename(&tmp, &labels_path).map_err(rankbins::Error::from)?;
    }
    let log = LabelLog::open(&labels_path)?;
    Ok(Session { meta, deck: Arc::new(deck), labels, log })
}
