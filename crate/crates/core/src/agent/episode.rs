use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::parse::{parse_model_output, ActionBlob, ParsedStep};
use super::prompt::build_system_prompt;
use super::AgentError;
use crate::gateway::{Backend, CompletionRequest};
use crate::tools::ToolRegistry;

pub const OBSERVATION_STOP: &str = "Observation:";
pub const INVALID_FORMAT_OBSERVATION: &str =
    "Invalid action format — emit one JSON blob with keys action, action_input.";
pub const FORCED_FINAL_SUFFIX: &str = "Thought: I now know the final answer\nFinal Answer:";
pub const DEFAULT_MAX_STEPS: usize = 8;

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Always reports the same instant; used for golden traces.
#[derive(Debug, Clone, Copy)]
pub struct FixedClock(pub DateTime<Utc>);

impl Clock for FixedClock {
    fn now(&self) -> DateTime<Utc> {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventBody {
    Thought(String),
    Action(ActionBlob),
    Observation(String),
    FinalAnswer(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub step_index: u32,
    #[serde(flatten)]
    pub body: EventBody,
    pub timestamp: DateTime<Utc>,
}

impl TraceEvent {
    pub fn kind(&self) -> &'static str {
        match self.body {
            EventBody::Thought(_) => "thought",
            EventBody::Action(_) => "action",
            EventBody::Observation(_) => "observation",
            EventBody::FinalAnswer(_) => "final",
        }
    }
}

/// One JSON object per line, newline-terminated.
pub fn trace_to_jsonl(trace: &[TraceEvent]) -> String {
    trace
        .iter()
        .map(|e| serde_json::to_string(e).expect("trace events serialize") + "\n")
        .collect()
}

pub fn trace_from_jsonl(text: &str) -> Result<Vec<TraceEvent>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Speaker {
    User,
    AI,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub speaker: Speaker,
    pub text: String,
}

/// Short-term memory: every past turn verbatim, plus the traces kept for
/// display. Only the turns re-enter later prompts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DialogueState {
    pub turns: Vec<Turn>,
    pub episodes: Vec<Vec<TraceEvent>>,
}

impl DialogueState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_exchange(&mut self, question: &str, answer: &str, trace: Vec<TraceEvent>) {
        self.turns.push(Turn {
            speaker: Speaker::User,
            text: question.to_string(),
        });
        self.turns.push(Turn {
            speaker: Speaker::AI,
            text: answer.to_string(),
        });
        self.episodes.push(trace);
    }

    pub fn render_history(&self) -> String {
        self.turns
            .iter()
            .map(|t| {
                let who = match t.speaker {
                    Speaker::User => "User",
                    Speaker::AI => "AI",
                };
                format!("{who}: {}\n", t.text)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub max_steps: usize,
    pub max_tokens: u32,
    pub temperature: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            max_steps: DEFAULT_MAX_STEPS,
            max_tokens: 1024,
            temperature: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub answer: String,
    pub trace: Vec<TraceEvent>,
}

/// ReAct agent: one backend, one tool registry.
#[derive(Clone)]
pub struct Agent {
    backend: Arc<dyn Backend>,
    tools: Arc<ToolRegistry>,
    config: AgentConfig,
    clock: Arc<dyn Clock>,
}

impl std::fmt::Debug for Agent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Agent")
            .field("backend", &self.backend.id())
            .field("tools", &self.tools)
            .field("config", &self.config)
            .finish()
    }
}

struct Recorder<'a> {
    trace: Vec<TraceEvent>,
    clock: &'a dyn Clock,
    sink: &'a mut dyn FnMut(&TraceEvent),
}

impl Recorder<'_> {
    fn emit(&mut self, body: EventBody) {
        let event = TraceEvent {
            step_index: self.trace.len() as u32,
            body,
            timestamp: self.clock.now(),
        };
        (self.sink)(&event);
        self.trace.push(event);
    }
}

impl Agent {
    pub fn new(backend: Arc<dyn Backend>, tools: Arc<ToolRegistry>, config: AgentConfig) -> Result<Self, AgentError> {
        if config.max_steps == 0 {
            return Err(AgentError::Config("max_steps must be at least 1".into()));
        }
        if tools.is_empty() {
            return Err(AgentError::NoTools);
        }
        Ok(Agent {
            backend,
            tools,
            config,
            clock: Arc::new(SystemClock),
        })
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn tools(&self) -> &ToolRegistry {
        &self.tools
    }

    /// System prompt, prior turns, then the new question.
    pub fn initial_prompt(&self, question: &str, state: &DialogueState) -> Result<String, AgentError> {
        let system = build_system_prompt(&self.tools)?;
        Ok(format!("{system}\n{}User: {question}\n", state.render_history()))
    }

    pub fn run_episode(&self, question: &str, state: &mut DialogueState) -> Result<EpisodeOutcome, AgentError> {
        self.run_episode_with(question, state, &mut |_| {})
    }

    /// Run one question to a final answer, reporting each event as it
    /// happens. On success the (User, AI) pair and the trace are appended
    /// to `state`; on a backend failure `state` is left untouched.
    pub fn run_episode_with(
        &self,
        question: &str,
        state: &mut DialogueState,
        on_event: &mut dyn FnMut(&TraceEvent),
    ) -> Result<EpisodeOutcome, AgentError> {
        let question = question.trim();
        if question.is_empty() {
            return Err(AgentError::EmptyQuestion);
        }
        let mut prompt = self.initial_prompt(question, state)?;
        let mut rec = Recorder {
            trace: Vec::new(),
            clock: self.clock.as_ref(),
            sink: on_event,
        };

        for _ in 0..self.config.max_steps {
            let text = self.complete(&prompt, &rec.trace)?;
            let observation = match parse_model_output(&text) {
                ParsedStep::FinalAnswer(answer) => {
                    rec.emit(EventBody::FinalAnswer(answer.clone()));
                    return Ok(self.finish(question, answer, rec.trace, state));
                }
                ParsedStep::Action { thought, blob } => {
                    if !thought.is_empty() {
                        rec.emit(EventBody::Thought(thought));
                    }
                    rec.emit(EventBody::Action(blob.clone()));
                    self.tools.dispatch(&blob.action, &blob.action_input).content
                }
                ParsedStep::Malformed(_) => INVALID_FORMAT_OBSERVATION.to_string(),
            };
            rec.emit(EventBody::Observation(observation.clone()));
            prompt.push_str(&text);
            if !text.ends_with('\n') {
                prompt.push('\n');
            }
            prompt.push_str(OBSERVATION_STOP);
            prompt.push(' ');
            prompt.push_str(&observation);
            prompt.push('\n');
        }

        prompt.push_str(FORCED_FINAL_SUFFIX);
        let answer = self.complete(&prompt, &rec.trace)?.trim().to_string();
        rec.emit(EventBody::FinalAnswer(answer.clone()));
        Ok(self.finish(question, answer, rec.trace, state))
    }

    fn complete(&self, prompt: &str, partial: &[TraceEvent]) -> Result<String, AgentError> {
        let request = CompletionRequest {
            prompt: prompt.to_string(),
            stop_sequences: vec![OBSERVATION_STOP.to_string()],
            max_tokens: self.config.max_tokens,
            temperature: self.config.temperature,
        };
        self.backend
            .complete(&request)
            .map(|r| r.text)
            .map_err(|source| AgentError::Backend {
                source,
                partial_trace: partial.to_vec(),
            })
    }

    fn finish(&self, question: &str, answer: String, trace: Vec<TraceEvent>, state: &mut DialogueState) -> EpisodeOutcome {
        state.push_exchange(question, &answer, trace.clone());
        EpisodeOutcome { answer, trace }
    }
}
