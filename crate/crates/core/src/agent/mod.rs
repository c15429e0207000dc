//! ReAct control loop for the academic question-answering agent.
//!
//! The model is prompted with the tool catalogue and the
//! Thought / Action / Observation format, stopped at `Observation:`, and
//! its output parsed into either one JSON action blob or a final answer.
//! Malformed output becomes an observation telling the model what to fix,
//! so an episode never dies on a formatting slip. After `max_steps` turns
//! the model is asked for its final answer directly.

mod episode;
mod parse;
mod prompt;

pub use episode::{
    trace_from_jsonl, trace_to_jsonl, Agent, AgentConfig, Clock, DialogueState, EpisodeOutcome, EventBody, FixedClock,
    Speaker, SystemClock, TraceEvent, Turn, DEFAULT_MAX_STEPS, FORCED_FINAL_SUFFIX, INVALID_FORMAT_OBSERVATION,
    OBSERVATION_STOP,
};
pub use parse::{normalize_quotes, parse_action_blob, parse_model_output, ActionBlob, BlobError, ParsedStep};
pub use prompt::build_system_prompt;

use crate::gateway::GatewayError;

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("no tools registered")]
    NoTools,
    #[error("question is empty")]
    EmptyQuestion,
    #[error("agent configuration: {0}")]
    Config(String),
    #[error("backend failed after {} trace events: {source}", partial_trace.len())]
    Backend {
        #[source]
        source: GatewayError,
        partial_trace: Vec<TraceEvent>,
    },
}
