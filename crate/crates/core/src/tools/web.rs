use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock};
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{ParamSpec, ToolHandler, ToolSpec};

pub const DEFAULT_TOP_N: usize = 5;
pub const SEARCH_UNAVAILABLE: &str = "Search unavailable";
const DEFAULT_TIMEOUT_SECS: u64 = 10;
const LEADERBOARD_ROWS: usize = 5;

pub fn web_search_spec() -> ToolSpec {
    ToolSpec {
        name: "WebSearchEngine".into(),
        description: "This is a web search engine. This tool will be very useful when you need to query basic academic knowledge and the latest academic knowledge.".into(),
        input_parameters: vec![ParamSpec::new(
            "query",
            "str",
            "Must required. Input is the search query related to the question.",
            true,
        )],
        input_example: "{'query': 'xxx'}".into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchResult {
    pub title: String,
    #[serde(default)]
    pub snippet: String,
    pub url: String,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum SearchError {
    #[error("timed out")]
    Timeout,
    #[error("transport: {0}")]
    Transport(String),
    #[error("HTTP {0}")]
    Status(u16),
    #[error("unexpected response: {0}")]
    Format(String),
    #[error("not found: {0}")]
    NotFound(String),
}

pub trait SearchProvider: Send + Sync {
    fn search(&self, query: &str, top_n: usize) -> Result<Vec<SearchResult>, SearchError>;
}

pub trait PageFetcher: Send + Sync {
    fn fetch(&self, url: &str) -> Result<String, SearchError>;
}

/// Structured extraction for pages from one host.
pub trait SiteHandler: Send + Sync {
    fn host(&self) -> &str;

    /// Replacement text for the result snippet, or `None` to keep it.
    fn extract(&self, page: &str) -> Option<String>;
}

/// Offline provider backed by a fixture:
/// `{"queries": {query: [results]}, "pages": {url: html}, "fail": [query]}`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StubSearch {
    #[serde(default)]
    pub queries: HashMap<String, Vec<SearchResult>>,
    #[serde(default)]
    pub pages: HashMap<String, String>,
    /// Queries that simulate an unreachable endpoint.
    #[serde(default)]
    pub fail: Vec<String>,
}

impl StubSearch {
    pub fn from_json(text: &str) -> Result<Self, SearchError> {
        serde_json::from_str(text).map_err(|e| SearchError::Format(e.to_string()))
    }
}

impl SearchProvider for StubSearch {
    fn search(&self, query: &str, top_n: usize) -> Result<Vec<SearchResult>, SearchError> {
        if self.fail.iter().any(|q| q == query) {
            return Err(SearchError::Timeout);
        }
        Ok(self.queries.get(query).map(|r| r.iter().take(top_n).cloned().collect()).unwrap_or_default())
    }
}

impl PageFetcher for StubSearch {
    fn fetch(&self, url: &str) -> Result<String, SearchError> {
        self.pages.get(url).cloned().ok_or_else(|| SearchError::NotFound(url.to_string()))
    }
}

fn map_reqwest(e: reqwest::Error) -> SearchError {
    if e.is_timeout() {
        SearchError::Timeout
    } else {
        SearchError::Transport(e.to_string())
    }
}

/// Generic web-search API: `GET url?q=<query>&count=<n>`.
///
/// Understands Bing-style `{"webPages": {"value": [{name, snippet, url}]}}`
/// and plain `{"results": [{title, snippet, url}]}` bodies.
pub struct HttpSearch {
    url: String,
    token: Option<String>,
    client: reqwest::blocking::Client,
}

impl fmt::Debug for HttpSearch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpSearch").field("url", &self.url).finish_non_exhaustive()
    }
}

impl HttpSearch {
    pub fn new(url: impl Into<String>, token: Option<String>, timeout: Duration) -> Result<Self, SearchError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| SearchError::Transport(e.to_string()))?;
        Ok(HttpSearch {
            url: url.into(),
            token,
            client,
        })
    }
}

impl SearchProvider for HttpSearch {
    fn search(&self, query: &str, top_n: usize) -> Result<Vec<SearchResult>, SearchError> {
        let mut call = self
            .client
            .get(&self.url)
            .query(&[("q", query), ("count", &top_n.to_string())]);
        if let Some(token) = &self.token {
            call = call
                .header("Ocp-Apim-Subscription-Key", token.as_str())
                .bearer_auth(token);
        }
        let resp = call.send().map_err(map_reqwest)?;
        if !resp.status().is_success() {
            return Err(SearchError::Status(resp.status().as_u16()));
        }
        let body: Value = resp.json().map_err(|e| SearchError::Format(e.to_string()))?;
        parse_search_body(&body).map(|mut r| {
            r.truncate(top_n);
            r
        })
    }
}

fn parse_search_body(body: &Value) -> Result<Vec<SearchResult>, SearchError> {
    if let Some(items) = body.pointer("/webPages/value").and_then(Value::as_array) {
        return Ok(items
            .iter()
            .filter_map(|v| {
                Some(SearchResult {
                    title: v.get("name")?.as_str()?.to_string(),
                    snippet: v.get("snippet").and_then(Value::as_str).unwrap_or_default().to_string(),
                    url: v.get("url")?.as_str()?.to_string(),
                })
            })
            .collect());
    }
    if let Some(items) = body.get("results") {
        return serde_json::from_value(items.clone()).map_err(|e| SearchError::Format(e.to_string()));
    }
    Err(SearchError::Format("no webPages.value or results array".into()))
}

pub struct HttpFetcher {
    client: reqwest::blocking::Client,
}

impl HttpFetcher {
    pub fn new(timeout: Duration) -> Result<Self, SearchError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| SearchError::Transport(e.to_string()))?;
        Ok(HttpFetcher { client })
    }
}

impl PageFetcher for HttpFetcher {
    fn fetch(&self, url: &str) -> Result<String, SearchError> {
        let resp = self.client.get(url).send().map_err(map_reqwest)?;
        if !resp.status().is_success() {
            return Err(SearchError::Status(resp.status().as_u16()));
        }
        resp.text().map_err(map_reqwest)
    }
}

fn re(cell: &'static OnceLock<Regex>, pattern: &str) -> &'static Regex {
    cell.get_or_init(|| Regex::new(pattern).expect("static regex"))
}

fn strip_tags(html: &str) -> String {
    static TAG: OnceLock<Regex> = OnceLock::new();
    let text = re(&TAG, r"(?s)<[^>]*>").replace_all(html, " ");
    let text = text
        .replace("&amp;", "&")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&nbsp;", " ");
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Leaderboard extraction for paperswithcode.com "sota" pages.
///
/// Reads the first HTML table: the `Rank`, `Model`/`Method` and `Paper`
/// columns are recognised, every other column is treated as a metric.
#[derive(Debug, Clone, Copy, Default)]
pub struct PapersWithCode;

impl SiteHandler for PapersWithCode {
    fn host(&self) -> &str {
        "paperswithcode.com"
    }

    fn extract(&self, page: &str) -> Option<String> {
        static TABLE: OnceLock<Regex> = OnceLock::new();
        static TITLE: OnceLock<Regex> = OnceLock::new();
        static ROW: OnceLock<Regex> = OnceLock::new();
        static HEAD: OnceLock<Regex> = OnceLock::new();
        static CELL: OnceLock<Regex> = OnceLock::new();

        let table = re(&TABLE, r"(?is)<table[^>]*>(.*?)</table>").captures(page)?.get(1)?.as_str();
        let headers: Vec<String> = re(&HEAD, r"(?is)<th[^>]*>(.*?)</th>")
            .captures_iter(table)
            .map(|c| strip_tags(&c[1]))
            .collect();
        if headers.is_empty() {
            return None;
        }
        let role = |h: &str| {
            let h = h.to_lowercase();
            if h.contains("rank") {
                "rank"
            } else if h.contains("model") || h.contains("method") {
                "model"
            } else if h.contains("paper") {
                "paper"
            } else if h.is_empty() || h.contains("code") || h.contains("result") || h.contains("year") || h.contains("tags") {
                "skip"
            } else {
                "metric"
            }
        };
        let mut lines = Vec::new();
        for row in re(&ROW, r"(?is)<tr[^>]*>(.*?)</tr>").captures_iter(table) {
            let cells: Vec<String> = re(&CELL, r"(?is)<td[^>]*>(.*?)</td>")
                .captures_iter(&row[1])
                .map(|c| strip_tags(&c[1]))
                .collect();
            if cells.is_empty() {
                continue;
            }
            let (mut rank, mut model, mut paper, mut metrics) = (None, None, None, Vec::new());
            for (header, cell) in headers.iter().zip(&cells) {
                match role(header) {
                    "rank" => rank = Some(cell.clone()),
                    "model" => model = Some(cell.clone()),
                    "paper" => paper = Some(cell.clone()),
                    "metric" if !cell.is_empty() => metrics.push(format!("{header} {cell}")),
                    _ => {}
                }
            }
            let mut parts = vec![format!(
                "Rank {}: {}",
                rank.unwrap_or_else(|| (lines.len() + 1).to_string()),
                model.unwrap_or_default()
            )];
            parts.extend(metrics);
            if let Some(paper) = paper.filter(|p| !p.is_empty()) {
                parts.push(format!("Paper: {paper}"));
            }
            lines.push(parts.join(" | "));
            if lines.len() == LEADERBOARD_ROWS {
                break;
            }
        }
        if lines.is_empty() {
            return None;
        }
        let heading = re(&TITLE, r"(?is)<title[^>]*>(.*?)</title>")
            .captures(page)
            .map(|c| strip_tags(&c[1]))
            .filter(|t| !t.is_empty())
            .unwrap_or_else(|| "Leaderboard".into());
        Some(format!("{heading}\n{}", lines.join("\n")))
    }
}

fn host_of(url: &str) -> Option<String> {
    reqwest::Url::parse(url).ok()?.host_str().map(str::to_ascii_lowercase)
}

fn host_matches(host: &str, handler_host: &str) -> bool {
    host == handler_host || host.ends_with(&format!(".{handler_host}"))
}

/// The WebSearchEngine tool.
pub struct WebSearchEngine {
    provider: Arc<dyn SearchProvider>,
    fetcher: Option<Arc<dyn PageFetcher>>,
    sites: Vec<Box<dyn SiteHandler>>,
    top_n: usize,
}

impl fmt::Debug for WebSearchEngine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WebSearchEngine")
            .field("sites", &self.sites.iter().map(|s| s.host().to_string()).collect::<Vec<_>>())
            .field("top_n", &self.top_n)
            .finish_non_exhaustive()
    }
}

impl WebSearchEngine {
    /// Engine with the PapersWithCode handler installed.
    pub fn new(provider: Arc<dyn SearchProvider>, fetcher: Option<Arc<dyn PageFetcher>>) -> Self {
        WebSearchEngine {
            provider,
            fetcher,
            sites: vec![Box::new(PapersWithCode)],
            top_n: DEFAULT_TOP_N,
        }
    }

    /// Offline engine; the stub serves both results and pages.
    pub fn stub(stub: StubSearch) -> Self {
        let stub = Arc::new(stub);
        Self::new(stub.clone(), Some(stub))
    }

    pub fn with_top_n(mut self, top_n: usize) -> Self {
        self.top_n = top_n.max(1);
        self
    }

    pub fn with_site(mut self, handler: impl SiteHandler + 'static) -> Self {
        self.sites.push(Box::new(handler));
        self
    }

    fn site_extract(&self, url: &str) -> Option<String> {
        let host = host_of(url)?;
        let handler = self.sites.iter().find(|s| host_matches(&host, s.host()))?;
        let page = self.fetcher.as_ref()?.fetch(url).ok()?;
        handler.extract(&page)
    }

    pub fn search(&self, query: &str) -> Result<String, String> {
        if query.trim().is_empty() {
            return Err("The query must not be empty.".into());
        }
        let results = self
            .provider
            .search(query, self.top_n)
            .map_err(|e| format!("{SEARCH_UNAVAILABLE} ({e}). You may retry."))?;
        if results.is_empty() {
            return Ok("No results found.".into());
        }
        let mut out = Vec::new();
        for (i, r) in results.iter().take(self.top_n).enumerate() {
            let body = self.site_extract(&r.url).unwrap_or_else(|| r.snippet.clone());
            out.push(format!("{}. {}\n{}\nURL: {}", i + 1, r.title, body, r.url));
        }
        Ok(out.join("\n\n"))
    }
}

impl ToolHandler for WebSearchEngine {
    fn call(&self, input: &Map<String, Value>) -> Result<String, String> {
        let query = input
            .get("query")
            .and_then(Value::as_str)
            .ok_or_else(|| "Parameter \"query\" must be a string.".to_string())?;
        self.search(query)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WebSearchProvider {
    Stub,
    Http,
}

/// The `"web_search"` config block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WebSearchConfig {
    pub provider: WebSearchProvider,
    #[serde(default)]
    pub url: Option<String>,
    #[serde(default)]
    pub auth_env_var: Option<String>,
    #[serde(default = "default_top_n")]
    pub top_n: usize,
    /// Fixture path for the stub provider.
    #[serde(default)]
    pub fixture: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_s: u64,
}

fn default_top_n() -> usize {
    DEFAULT_TOP_N
}

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_SECS
}

impl WebSearchConfig {
    pub fn build(&self) -> Result<WebSearchEngine, SearchError> {
        let engine = match self.provider {
            WebSearchProvider::Stub => {
                let stub = match &self.fixture {
                    Some(path) => {
                        let text = std::fs::read_to_string(path).map_err(|e| SearchError::Format(format!("{path}: {e}")))?;
                        StubSearch::from_json(&text)?
                    }
                    None => StubSearch::default(),
                };
                WebSearchEngine::stub(stub)
            }
            WebSearchProvider::Http => {
                let url = self
                    .url
                    .clone()
                    .ok_or_else(|| SearchError::Format("http provider needs \"url\"".into()))?;
                let token = match &self.auth_env_var {
                    Some(var) => Some(std::env::var(var).map_err(|_| SearchError::Format(format!("{var} is not set")))?),
                    None => None,
                };
                let timeout = Duration::from_secs(self.timeout_s);
                WebSearchEngine::new(
                    Arc::new(HttpSearch::new(url, token, timeout)?),
                    Some(Arc::new(HttpFetcher::new(timeout)?)),
                )
            }
        };
        Ok(engine.with_top_n(self.top_n))
    }
}
