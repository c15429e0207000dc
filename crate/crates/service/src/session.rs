//! In-memory session store with an optional JSON Lines journal.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use workbench_core::agent::{Agent, AgentConfig, AgentError, Clock, DialogueState, EpisodeOutcome, SystemClock, TraceEvent, Turn};
use workbench_core::gateway::{Backend, GatewayError};
use workbench_core::tools::ToolRegistry;

/// Produces the backend for a new session.
pub type BackendFactory = Arc<dyn Fn() -> Result<Arc<dyn Backend>, GatewayError> + Send + Sync>;

pub const MAX_STEPS_LIMIT: usize = 64;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("session {0} not found")]
    NotFound(String),
    #[error("session {0} already has a message in flight")]
    Busy(String),
    #[error("invalid session config: {0}")]
    InvalidOverrides(String),
    #[error("backend: {0}")]
    Backend(#[from] GatewayError),
    #[error("agent: {0}")]
    Agent(#[from] AgentError),
    #[error("journal {path}: {message}")]
    Journal { path: String, message: String },
}

/// Per-session changes to the agent defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionOverrides {
    #[serde(default)]
    pub max_steps: Option<usize>,
    #[serde(default)]
    pub max_tokens: Option<u32>,
    #[serde(default)]
    pub temperature: Option<f64>,
}

impl SessionOverrides {
    pub fn apply(&self, base: &AgentConfig) -> Result<AgentConfig, StoreError> {
        let mut config = base.clone();
        if let Some(n) = self.max_steps {
            if n == 0 || n > MAX_STEPS_LIMIT {
                return Err(StoreError::InvalidOverrides(format!("max_steps must be 1..={MAX_STEPS_LIMIT}, got {n}")));
            }
            config.max_steps = n;
        }
        if let Some(n) = self.max_tokens {
            if n == 0 {
                return Err(StoreError::InvalidOverrides("max_tokens must be at least 1".into()));
            }
            config.max_tokens = n;
        }
        if let Some(t) = self.temperature {
            if !(0.0..=2.0).contains(&t) {
                return Err(StoreError::InvalidOverrides(format!("temperature must be within 0..=2, got {t}")));
            }
            config.temperature = t;
        }
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    pub turns: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    pub config: AgentConfig,
    pub busy: bool,
    pub turns: Vec<Turn>,
    pub episodes: Vec<Vec<TraceEvent>>,
}

struct Inner {
    state: DialogueState,
    updated_at: DateTime<Utc>,
}

pub struct Session {
    id: String,
    created_at: DateTime<Utc>,
    config: AgentConfig,
    agent: Agent,
    inner: Mutex<Inner>,
    busy: AtomicBool,
}

impl Session {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn view(&self) -> SessionView {
        let inner = self.inner.lock().expect("session lock");
        SessionView {
            id: self.id.clone(),
            created_at: self.created_at,
            updated_at: inner.updated_at,
            config: self.config.clone(),
            busy: self.busy.load(Ordering::SeqCst),
            turns: inner.state.turns.clone(),
            episodes: inner.state.episodes.clone(),
        }
    }

    fn summary(&self) -> SessionSummary {
        let inner = self.inner.lock().expect("session lock");
        SessionSummary {
            id: self.id.clone(),
            created_at: self.created_at,
            updated_at: inner.updated_at,
            turns: inner.state.turns.len(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum JournalEntry {
    Created {
        id: String,
        created_at: DateTime<Utc>,
        config: AgentConfig,
    },
    Exchange {
        question: String,
        answer: String,
        trace: Vec<TraceEvent>,
        at: DateTime<Utc>,
    },
}

#[derive(Debug, Clone)]
struct Journal {
    dir: PathBuf,
}

impl Journal {
    fn path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.jsonl"))
    }

    fn err(path: &Path, e: impl ToString) -> StoreError {
        StoreError::Journal {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    fn append(&self, id: &str, entry: &JournalEntry) -> Result<(), StoreError> {
        let path = self.path(id);
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Self::err(&path, e))?;
        let line = serde_json::to_string(entry).map_err(|e| Self::err(&path, e))? + "\n";
        file.write_all(line.as_bytes()).map_err(|e| Self::err(&path, e))?;
        file.sync_data().map_err(|e| Self::err(&path, e))
    }

    fn remove(&self, id: &str) -> Result<(), StoreError> {
        let path = self.path(id);
        match fs::remove_file(&path) {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(Self::err(&path, e)),
            _ => Ok(()),
        }
    }

    fn read(path: &Path) -> Result<Vec<JournalEntry>, StoreError> {
        let file = File::open(path).map_err(|e| Self::err(path, e))?;
        let mut entries = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Self::err(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            entries.push(serde_json::from_str(&line).map_err(|e| Self::err(path, format!("line {}: {e}", i + 1)))?);
        }
        Ok(entries)
    }
}

pub struct SessionStore {
    sessions: RwLock<HashMap<String, Arc<Session>>>,
    factory: BackendFactory,
    tools: Arc<ToolRegistry>,
    defaults: AgentConfig,
    clock: Arc<dyn Clock>,
    journal: Option<Journal>,
}

impl SessionStore {
    pub fn new(factory: BackendFactory, tools: Arc<ToolRegistry>, defaults: AgentConfig) -> Self {
        SessionStore {
            sessions: RwLock::new(HashMap::new()),
            factory,
            tools,
            defaults,
            clock: Arc::new(SystemClock),
            journal: None,
        }
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    /// Persist sessions under `dir`, restoring any journals already there.
    pub fn with_journal(mut self, dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Journal::err(&dir, e))?;
        let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(|e| Journal::err(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        for path in paths {
            let mut entries = Journal::read(&path)?.into_iter();
            let Some(JournalEntry::Created { id, created_at, config }) = entries.next() else {
                return Err(Journal::err(&path, "journal does not start with a created entry"));
            };
            let session = self.make_session(id.clone(), created_at, config)?;
            {
                let mut inner = session.inner.lock().expect("session lock");
                for entry in entries {
                    if let JournalEntry::Exchange { question, answer, trace, at } = entry {
                        inner.state.push_exchange(&question, &answer, trace);
                        inner.updated_at = at;
                    }
                }
            }
            self.sessions.write().expect("store lock").insert(id, Arc::new(session));
        }
        self.journal = Some(Journal { dir });
        Ok(self)
    }

    fn make_session(&self, id: String, created_at: DateTime<Utc>, config: AgentConfig) -> Result<Session, StoreError> {
        let backend = (self.factory)()?;
        let agent = Agent::new(backend, self.tools.clone(), config.clone())?.with_clock(self.clock.clone());
        Ok(Session {
            id,
            created_at,
            config,
            agent,
            inner: Mutex::new(Inner {
                state: DialogueState::new(),
                updated_at: created_at,
            }),
            busy: AtomicBool::new(false),
        })
    }

    pub fn create(&self, overrides: &SessionOverrides) -> Result<SessionView, StoreError> {
        let config = overrides.apply(&self.defaults)?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let session = self.make_session(id.clone(), self.clock.now(), config.clone())?;
        if let Some(journal) = &self.journal {
            journal.append(
                &id,
                &JournalEntry::Created {
                    id: id.clone(),
                    created_at: session.created_at,
                    config,
                },
            )?;
        }
        let view = session.view();
        self.sessions.write().expect("store lock").insert(id, Arc::new(session));
        Ok(view)
    }

    fn session(&self, id: &str) -> Result<Arc<Session>, StoreError> {
        self.sessions
            .read()
            .expect("store lock")
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::NotFound(id.to_string()))
    }

    pub fn get(&self, id: &str) -> Result<SessionView, StoreError> {
        Ok(self.session(id)?.view())
    }

    /// Summaries ordered by creation time, then id.
    pub fn list(&self) -> Vec<SessionSummary> {
        let mut out: Vec<SessionSummary> = self.sessions.read().expect("store lock").values().map(|s| s.summary()).collect();
        out.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.id.cmp(&b.id)));
        out
    }

    pub fn delete(&self, id: &str) -> Result<(), StoreError> {
        let mut sessions = self.sessions.write().expect("store lock");
        let session = sessions.get(id).ok_or_else(|| StoreError::NotFound(id.to_string()))?;
        if session.busy.load(Ordering::SeqCst) {
            return Err(StoreError::Busy(id.to_string()));
        }
        sessions.remove(id);
        if let Some(journal) = &self.journal {
            journal.remove(id)?;
        }
        Ok(())
    }

    /// Claim the session for one message. Fails with `Busy` while another
    /// message is in flight.
    pub fn begin(&self, id: &str) -> Result<MessageGuard, StoreError> {
        let session = self.session(id)?;
        session
            .busy
            .compare_exchange(false, true, Ordering::SeqCst, Ordering::SeqCst)
            .map_err(|_| StoreError::Busy(id.to_string()))?;
        Ok(MessageGuard {
            session,
            journal: self.journal.clone(),
            clock: self.clock.clone(),
        })
    }
}

/// Exclusive right to run one episode in a session; released on drop.
pub struct MessageGuard {
    session: Arc<Session>,
    journal: Option<Journal>,
    clock: Arc<dyn Clock>,
}

impl MessageGuard {
    pub fn session_id(&self) -> &str {
        &self.session.id
    }

    /// Run one episode. The session's state is updated (and journaled)
    /// only when the episode completes.
    pub fn run(&self, question: &str, on_event: &mut dyn FnMut(&TraceEvent)) -> Result<EpisodeOutcome, StoreError> {
        let mut state = self.session.inner.lock().expect("session lock").state.clone();
        let outcome = self.session.agent.run_episode_with(question, &mut state, on_event)?;
        let at = self.clock.now();
        if let Some(journal) = &self.journal {
            journal.append(
                &self.session.id,
                &JournalEntry::Exchange {
                    question: question.trim().to_string(),
                    answer: outcome.answer.clone(),
                    trace: outcome.trace.clone(),
                    at,
                },
            )?;
        }
        let mut inner = self.session.inner.lock().expect("session lock");
        inner.state = state;
        inner.updated_at = at;
        Ok(outcome)
    }
}

impl Drop for MessageGuard {
    fn drop(&mut self) {
        self.session.busy.store(false, Ordering::SeqCst);
    }
}
