#![allow(dead_code)]

pub mod oracle;
pub mod synth;

use std::path::PathBuf;
use std::sync::Arc;

use chrono::{DateTime, TimeZone, Utc};
use workbench_core::agent::{Agent, AgentConfig, FixedClock};
use workbench_core::gateway::{Backend, ScriptedBackend};
use workbench_core::kg::{KgIndex, SharedIndex};
use workbench_core::tools::{academic_search_spec, web_search_spec, AcademicSearch, StubSearch, ToolRegistry, WebSearchEngine};

pub const GOLDEN_QUESTION: &str = "Who wrote \"Attention Is All You Need\" and when was it published?";

/// Fixture path; resolves from any crate in the workspace.
pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()
}

pub fn paper_index() -> KgIndex {
    let file = std::fs::File::open(fixture("papers.jsonl")).unwrap();
    let (index, stats) = KgIndex::ingest(std::io::BufReader::new(file)).unwrap();
    assert_eq!(stats.rejected, 0, "{:?}", stats.reasons);
    index
}

pub fn web_stub() -> StubSearch {
    StubSearch::from_json(&read_fixture("web_stub.json")).unwrap()
}

/// AcademicSearch over the paper fixture plus the stubbed web search.
pub fn registry() -> ToolRegistry {
    let mut reg = ToolRegistry::new();
    reg.register(academic_search_spec(), AcademicSearch::new(SharedIndex::new(paper_index())))
        .unwrap();
    reg.register(web_search_spec(), WebSearchEngine::stub(web_stub())).unwrap();
    reg
}

pub fn golden_backend() -> ScriptedBackend {
    ScriptedBackend::from_json(&read_fixture("golden_3turn_script.json")).unwrap()
}

pub fn agent_with(backend: impl Backend + 'static, config: AgentConfig) -> Agent {
    Agent::new(Arc::new(backend), Arc::new(registry()), config)
        .unwrap()
        .with_clock(Arc::new(FixedClock(epoch())))
}

pub fn agent(backend: impl Backend + 'static) -> Agent {
    agent_with(backend, AgentConfig::default())
}

/// Serve `responses.len()` HTTP requests on a local port, answering each
/// with the next `(status, content type, body)`. The join handle yields
/// the raw requests.
pub fn http_stub(responses: Vec<(u16, &'static str, String)>) -> (String, std::thread::JoinHandle<Vec<String>>) {
    use std::io::{BufRead, BufReader, Read, Write};

    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let handle = std::thread::spawn(move || {
        let mut seen = Vec::new();
        for (status, content_type, body) in responses {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream);
            let mut head = String::new();
            let mut content_length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    content_length = v.trim().parse().unwrap();
                }
                head.push_str(&line);
                if line == "\r\n" || line.is_empty() {
                    break;
                }
            }
            let mut payload = vec![0; content_length];
            reader.read_exact(&mut payload).unwrap();
            head.push_str(&String::from_utf8_lossy(&payload));
            seen.push(head);
            let response = format!(
                "HTTP/1.1 {status} X\r\ncontent-type: {content_type}\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
            reader.get_mut().write_all(response.as_bytes()).unwrap();
        }
        seen
    });
    (url, handle)
}
