//! In-memory session registry with optional transcript snapshots.
//!
//! Each session sits behind its own mutex, so mutations of one session are
//! serialized while different sessions proceed independently. When a
//! snapshot directory is configured, the action log of a session is written
//! there after every successful mutation and replayed on startup; stage
//! images are never stored.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use photofit_core::catalog::Catalog;
use photofit_core::session::{Action, Session, SessionError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type SessionHandle = Arc<Mutex<Session>>;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("snapshot {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("snapshot {path}: {source}")]
    Decode {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("snapshot {path} no longer replays: {source}")]
    Replay {
        path: PathBuf,
        #[source]
        source: SessionError,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct Snapshot {
    id: String,
    transcript: Vec<Action>,
}

pub struct SessionStore {
    sessions: RwLock<HashMap<String, SessionHandle>>,
    snapshot_dir: Option<PathBuf>,
}

impl SessionStore {
    pub fn in_memory() -> Self {
        Self {
            sessions: RwLock::new(HashMap::new()),
            snapshot_dir: None,
        }
    }

    /// Opens a store backed by `dir`, replaying every `*.json` snapshot in it.
    pub fn with_snapshots(dir: &Path, catalog: &Catalog) -> Result<Self, StoreError> {
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| StoreError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let mut sessions = HashMap::new();
        for entry in fs::read_dir(dir).map_err(io_err(dir))? {
            let path = entry.map_err(io_err(dir))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let snap: Snapshot =
                serde_json::from_str(&text).map_err(|source| StoreError::Decode {
                    path: path.clone(),
                    source,
                })?;
            let session =
                Session::replay(snap.id.clone(), catalog, &snap.transcript).map_err(|source| {
                    StoreError::Replay {
                        path: path.clone(),
                        source,
                    }
                })?;
            sessions.insert(snap.id, Arc::new(Mutex::new(session)));
        }
        Ok(Self {
            sessions: RwLock::new(sessions),
            snapshot_dir: Some(dir.to_path_buf()),
        })
    }

    pub fn create(&self) -> Result<SessionHandle, StoreError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let session = Session::new(id.clone());
        self.persist(&session)?;
        let handle = Arc::new(Mutex::new(session));
        self.sessions.write().insert(id, handle.clone());
        Ok(handle)
    }

    pub fn get(&self, id: &str) -> Option<SessionHandle> {
        self.sessions.read().get(id).cloned()
    }

    pub fn len(&self) -> usize {
        self.sessions.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes the transcript of `session` if snapshots are enabled.
    pub fn persist(&self, session: &Session) -> Result<(), StoreError> {
        let Some(dir) = &self.snapshot_dir else {
            return Ok(());
        };
        let snap = Snapshot {
            id: session.id().to_string(),
            transcript: session.transcript().to_vec(),
        };
        let path = dir.join(format!("{}.json", snap.id));
        let tmp = dir.join(format!(".{}.json.tmp", snap.id));
        let body = serde_json::to_vec_pretty(&snap).expect("actions always serialize");
        fs::write(&tmp, body).map_err(|source| StoreError::Io {
            path: tmp.clone(),
            source,
        })?;
        fs::rename(&tmp, &path).map_err(|source| StoreError::Io { path, source })
    }
}
