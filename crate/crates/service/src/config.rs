use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use workbench_core::agent::AgentConfig;
use workbench_core::gateway::{Backend, GatewayConfig};
use workbench_core::kg::{KgIndex, SharedIndex};
use workbench_core::tools::{academic_search_spec, web_search_spec, AcademicSearch, ToolRegistry, WebSearchConfig, WebSearchEngine};

pub const CONFIG_ENV: &str = "WORKBENCH_CONFIG";
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    File { path: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerConfig {
    #[serde(default)]
    pub bind: Option<String>,
    /// Allowed browser origins; `["*"]` allows any.
    #[serde(default)]
    pub cors_origins: Vec<String>,
    /// Directory for per-session JSON Lines journals; in-memory when unset.
    #[serde(default)]
    pub journal_dir: Option<PathBuf>,
}

/// The single JSON config file shared by the CLI and the service.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default)]
    pub gateway: Option<GatewayConfig>,
    /// Saved index file or a JSON Lines record dump.
    #[serde(default)]
    pub kg: Option<PathBuf>,
    #[serde(default)]
    pub web_search: Option<WebSearchConfig>,
    #[serde(default)]
    pub agent: Option<AgentConfig>,
    #[serde(default)]
    pub server: ServerConfig,
}

impl ServiceConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let file_err = |message: String| ConfigError::File {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| file_err(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| file_err(e.to_string()))
    }

    /// `--config` if given, else `$WORKBENCH_CONFIG`, else defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self, ConfigError> {
        match explicit {
            Some(p) => Self::from_file(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) => Self::from_file(Path::new(&p)),
                None => Ok(Self::default()),
            },
        }
    }

    pub fn agent_config(&self) -> AgentConfig {
        self.agent.clone().unwrap_or_default()
    }

    pub fn backend(&self) -> Result<Arc<dyn Backend>, ConfigError> {
        let gateway = self
            .gateway
            .as_ref()
            .ok_or_else(|| ConfigError::Invalid("no backend configured: add a \"gateway\" block or pass --script".into()))?;
        gateway
            .build()
            .map(Arc::from)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn load_index(&self) -> Result<KgIndex, ConfigError> {
        match &self.kg {
            Some(path) => load_index_file(path),
            None => Ok(KgIndex::from_records(Vec::new())),
        }
    }

    /// AcademicSearch over the configured index plus WebSearchEngine.
    pub fn tools(&self) -> Result<ToolRegistry, ConfigError> {
        build_registry(SharedIndex::new(self.load_index()?), self.web_search.as_ref())
    }
}

/// A saved index (`.json`) or a record dump (anything else).
pub fn load_index_file(path: &Path) -> Result<KgIndex, ConfigError> {
    let invalid = |e: String| ConfigError::File {
        path: path.display().to_string(),
        message: e,
    };
    if path.extension().is_some_and(|e| e == "json") {
        return KgIndex::load(path).map_err(|e| invalid(e.to_string()));
    }
    let file = std::fs::File::open(path).map_err(|e| invalid(e.to_string()))?;
    KgIndex::ingest(std::io::BufReader::new(file))
        .map(|(index, _)| index)
        .map_err(|e| invalid(e.to_string()))
}

pub fn build_registry(index: SharedIndex, web: Option<&WebSearchConfig>) -> Result<ToolRegistry, ConfigError> {
    let engine = match web {
        Some(cfg) => cfg.build().map_err(|e| ConfigError::Invalid(format!("web_search: {e}")))?,
        None => WebSearchEngine::stub(Default::default()),
    };
    let mut registry = ToolRegistry::new();
    registry
        .register(academic_search_spec(), AcademicSearch::new(index))
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    registry
        .register(web_search_spec(), engine)
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(registry)
}
