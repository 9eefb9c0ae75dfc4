//! In-memory scenario sessions with explicit save-to-disk.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use ermcda_core::pipeline::{
    execute, load_value, report, whatif, Issue, LoadError, PatchOp, PipelineError, RunOptions, RunReport, RunState,
    Scenario, WhatIfError,
};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("no scenario with id `{0}`")]
    NotFound(String),
    #[error("scenario has validation errors")]
    Invalid(Vec<Issue>),
    #[error("patch path `{0}` does not exist")]
    BadPath(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("scenario `{0}` has not been run yet")]
    NoReport(String),
    #[error("no persistence directory configured")]
    NoDirectory,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<LoadError> for StoreError {
    fn from(e: LoadError) -> Self {
        StoreError::Invalid(e.issues)
    }
}

impl From<WhatIfError> for StoreError {
    fn from(e: WhatIfError) -> Self {
        match e {
            WhatIfError::BadPath(p) => StoreError::BadPath(p),
            WhatIfError::Invalid(e) => e.into(),
            WhatIfError::Run(e) => e.into(),
        }
    }
}

/// A draft and whatever was computed from it.
#[derive(Debug)]
struct Session {
    /// Canonical document when valid, otherwise the document as submitted.
    doc: Value,
    scenario: Result<Scenario, Vec<Issue>>,
    last_report: Option<RunReport>,
    /// Stage artifacts of the draft, reused by what-if runs.
    state: Option<(RunOptions, RunState)>,
}

impl Session {
    fn new(doc: Value) -> Self {
        match load_value(doc.clone()) {
            Ok(s) => Session {
                doc: serde_json::to_value(s.doc()).expect("scenario documents always serialize"),
                scenario: Ok(s),
                last_report: None,
                state: None,
            },
            Err(e) => Session { doc, scenario: Err(e.issues), last_report: None, state: None },
        }
    }

    fn scenario(&self) -> Result<&Scenario, StoreError> {
        self.scenario.as_ref().map_err(|issues| StoreError::Invalid(issues.clone()))
    }

    fn base_state(&mut self, opts: &RunOptions) -> Result<&RunState, StoreError> {
        let key = RunOptions { lean: false, ..*opts };
        if self.state.as_ref().map(|(k, _)| *k != key).unwrap_or(true) {
            let st = execute(self.scenario()?, &key)?;
            self.state = Some((key, st));
        }
        Ok(&self.state.as_ref().expect("state was just filled").1)
    }
}

/// Sessions keyed by id. Requests on one session are serialized by its
/// mutex; different sessions proceed in parallel.
#[derive(Debug, Default)]
pub struct SessionStore {
    sessions: RwLock<BTreeMap<String, Arc<Mutex<Session>>>>,
    next: AtomicU64,
    dir: Option<PathBuf>,
}

impl SessionStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Store that saves into, and restores from, `dir`.
    pub fn with_dir(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        let store = SessionStore { dir: Some(dir.clone()), ..Self::default() };
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        for path in paths {
            let Some(id) = path.file_stem().and_then(|s| s.to_str()) else { continue };
            let text = std::fs::read_to_string(&path)?;
            let Ok(doc) = serde_json::from_str::<Value>(&text) else { continue };
            store.insert(id.to_string(), Session::new(doc));
        }
        Ok(store)
    }

    fn insert(&self, id: String, session: Session) {
        self.sessions.write().unwrap().insert(id, Arc::new(Mutex::new(session)));
    }

    fn fresh_id(&self) -> String {
        let sessions = self.sessions.read().unwrap();
        loop {
            let id = format!("s{}", self.next.fetch_add(1, Ordering::Relaxed) + 1);
            if !sessions.contains_key(&id) {
                return id;
            }
        }
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, StoreError> {
        self.sessions.read().unwrap().get(id).cloned().ok_or_else(|| StoreError::NotFound(id.to_string()))
    }

    fn with<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> Result<T, StoreError>) -> Result<T, StoreError> {
        let s = self.session(id)?;
        let mut guard = s.lock().unwrap_or_else(|p| p.into_inner());
        f(&mut guard)
    }

    pub fn ids(&self) -> Vec<String> {
        self.sessions.read().unwrap().keys().cloned().collect()
    }

    /// Opens a session on a valid document; invalid documents are refused.
    pub fn create(&self, doc: Value) -> Result<String, StoreError> {
        let session = Session::new(doc);
        if let Err(issues) = &session.scenario {
            return Err(StoreError::Invalid(issues.clone()));
        }
        let id = self.fresh_id();
        self.insert(id.clone(), session);
        Ok(id)
    }

    pub fn get(&self, id: &str) -> Result<Value, StoreError> {
        self.with(id, |s| Ok(s.doc.clone()))
    }

    /// Replaces the draft. An invalid draft is kept as submitted, with its
    /// issues, and the issues are returned.
    pub fn put(&self, id: &str, doc: Value) -> Result<(), StoreError> {
        self.with(id, |s| {
            *s = Session::new(doc);
            s.scenario().map(|_| ())
        })
    }

    pub fn run(&self, id: &str, opts: &RunOptions) -> Result<RunReport, StoreError> {
        self.with(id, |s| {
            let st = s.base_state(opts)?.clone();
            let r = report(s.scenario()?, &st, opts);
            s.last_report = Some(r.clone());
            Ok(r)
        })
    }

    /// Runs a patched copy of the draft, recomputing only the stages the
    /// patch reaches. The draft and its last report are left alone.
    pub fn whatif(&self, id: &str, ops: &[PatchOp], opts: &RunOptions) -> Result<RunReport, StoreError> {
        self.with(id, |s| {
            let base = s.scenario()?.clone();
            let previous = s.base_state(opts)?;
            let (patched, st) = whatif(&base, Some(previous), ops, opts)?;
            Ok(report(&patched, &st, opts))
        })
    }

    pub fn last_report(&self, id: &str) -> Result<RunReport, StoreError> {
        self.with(id, |s| s.last_report.clone().ok_or_else(|| StoreError::NoReport(id.to_string())))
    }

    /// Writes the draft to `<dir>/<id>.json` and returns the path.
    pub fn save(&self, id: &str) -> Result<PathBuf, StoreError> {
        let dir = self.dir.clone().ok_or(StoreError::NoDirectory)?;
        self.with(id, |s| {
            let path = dir.join(format!("{id}.json"));
            let text = serde_json::to_string_pretty(&s.doc).expect("json values always serialize");
            std::fs::write(&path, text + "\n")?;
            Ok(path)
        })
    }
}
