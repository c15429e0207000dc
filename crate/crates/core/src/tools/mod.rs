//! Tool registry and the agent's two shipped tools.

mod academic;
mod web;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub use academic::{academic_search_spec, render_hits, AcademicSearch, NO_MATCHES};
pub use web::{
    web_search_spec, HttpFetcher, HttpSearch, PageFetcher, PapersWithCode, SearchError, SearchProvider, SearchResult,
    SiteHandler, StubSearch, WebSearchConfig, WebSearchEngine, WebSearchProvider, DEFAULT_TOP_N, SEARCH_UNAVAILABLE,
};

pub const DEFAULT_OBSERVATION_CAP: usize = 4_000;
pub const TRUNCATION_MARKER: &str = "\n...[truncated]";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    /// Type tag shown to the model, e.g. `str`, `list(str)`, `json`.
    pub type_tag: String,
    pub description: String,
    pub required: bool,
}

impl ParamSpec {
    pub fn new(name: &str, type_tag: &str, description: &str, required: bool) -> Self {
        ParamSpec {
            name: name.into(),
            type_tag: type_tag.into(),
            description: description.into(),
            required,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub name: String,
    pub description: String,
    pub input_parameters: Vec<ParamSpec>,
    pub input_example: String,
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

impl ToolSpec {
    /// Parameters with required ones first, declaration order otherwise kept.
    pub fn ordered_parameters(&self) -> impl Iterator<Item = &ParamSpec> {
        let required = self.input_parameters.iter().filter(|p| p.required);
        let optional = self.input_parameters.iter().filter(|p| !p.required);
        required.chain(optional)
    }

    /// The one-line JSON description of the tool embedded in the system prompt.
    pub fn render(&self) -> String {
        let params: Vec<String> = self
            .ordered_parameters()
            .map(|p| {
                format!(
                    "{}: {{\"type\": {}, \"description\": {}}}",
                    json_str(&p.name),
                    json_str(&p.type_tag),
                    json_str(&p.description)
                )
            })
            .collect();
        format!(
            "{{\"description\": {}, \"input_parameters\": {{{}}}, \"example of INPUT\": {}}}",
            json_str(&self.description),
            params.join(", "),
            json_str(&self.input_example)
        )
    }
}

/// What a tool hands back to the agent loop.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolObservation {
    pub ok: bool,
    pub content: String,
    pub source: String,
}

impl ToolObservation {
    /// Build an observation, capping `content` at `cap` characters.
    pub fn capped(ok: bool, content: impl Into<String>, source: impl Into<String>, cap: usize) -> Self {
        let mut content = content.into();
        if content.trim().is_empty() {
            content = "(empty result)".into();
        }
        ToolObservation {
            ok,
            content: cap_content(content, cap),
            source: source.into(),
        }
    }

    pub fn is_truncated(&self) -> bool {
        self.content.ends_with(TRUNCATION_MARKER)
    }
}

fn cap_content(content: String, cap: usize) -> String {
    if content.chars().count() <= cap {
        return content;
    }
    let keep = cap.saturating_sub(TRUNCATION_MARKER.chars().count());
    let mut out: String = content.chars().take(keep).collect();
    out.push_str(TRUNCATION_MARKER);
    out
}

/// A tool implementation. `Err` becomes an `ok = false` observation.
pub trait ToolHandler: Send + Sync {
    fn call(&self, input: &Map<String, Value>) -> Result<String, String>;
}

impl<F> ToolHandler for F
where
    F: Fn(&Map<String, Value>) -> Result<String, String> + Send + Sync,
{
    fn call(&self, input: &Map<String, Value>) -> Result<String, String> {
        self(input)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("tool {0:?} is already registered")]
    Duplicate(String),
    #[error("tool name must not be empty")]
    EmptyName,
}

struct Entry {
    spec: ToolSpec,
    handler: Arc<dyn ToolHandler>,
}

/// Tools in registration order.
pub struct ToolRegistry {
    entries: Vec<Entry>,
    cap: usize,
}

impl Default for ToolRegistry {
    fn default() -> Self {
        Self::new()
    }
}

impl std::fmt::Debug for ToolRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ToolRegistry").field("tools", &self.names()).field("cap", &self.cap).finish()
    }
}

impl ToolRegistry {
    pub fn new() -> Self {
        ToolRegistry {
            entries: Vec::new(),
            cap: DEFAULT_OBSERVATION_CAP,
        }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn register(&mut self, spec: ToolSpec, handler: impl ToolHandler + 'static) -> Result<(), RegistryError> {
        self.register_arc(spec, Arc::new(handler))
    }

    pub fn register_arc(&mut self, spec: ToolSpec, handler: Arc<dyn ToolHandler>) -> Result<(), RegistryError> {
        if spec.name.trim().is_empty() {
            return Err(RegistryError::EmptyName);
        }
        if self.lookup(&spec.name).is_some() {
            return Err(RegistryError::Duplicate(spec.name));
        }
        self.entries.push(Entry { spec, handler });
        Ok(())
    }

    pub fn lookup(&self, name: &str) -> Option<&ToolSpec> {
        self.entries.iter().find(|e| e.spec.name == name).map(|e| &e.spec)
    }

    pub fn specs(&self) -> impl Iterator<Item = &ToolSpec> {
        self.entries.iter().map(|e| &e.spec)
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.spec.name.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Run a tool. Never fails: every problem comes back as an
    /// `ok = false` observation the model can read.
    pub fn dispatch(&self, name: &str, input: &Map<String, Value>) -> ToolObservation {
        let Some(entry) = self.entries.iter().find(|e| e.spec.name == name) else {
            return ToolObservation::capped(
                false,
                format!("Unknown tool {name:?}. Valid tools: {}.", self.names().join(", ")),
                name,
                self.cap,
            );
        };
        if let Some(missing) = entry
            .spec
            .input_parameters
            .iter()
            .find(|p| p.required && input.get(&p.name).is_none_or(Value::is_null))
        {
            return ToolObservation::capped(
                false,
                format!("Missing required parameter {:?} for tool {name}.", missing.name),
                name,
                self.cap,
            );
        }
        let outcome = catch_unwind(AssertUnwindSafe(|| entry.handler.call(input)))
            .unwrap_or_else(|_| Err(format!("Tool {name} failed unexpectedly.")));
        match outcome {
            Ok(content) => ToolObservation::capped(true, content, name, self.cap),
            Err(content) => ToolObservation::capped(false, content, name, self.cap),
        }
    }
}
