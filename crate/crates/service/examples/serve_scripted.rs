//! Start the session service on a local port with a scripted model, ask one
//! question over HTTP and print the server-sent events.

use std::io::Cursor;
use std::sync::Arc;

use serde_json::{json, Value};
use workbench_core::agent::AgentConfig;
use workbench_core::gateway::{Backend, ScriptedBackend};
use workbench_core::kg::{KgIndex, SharedIndex};
use workbench_service::config::build_registry;
use workbench_service::server::{self, parse_sse};
use workbench_service::session::SessionStore;

const PAPERS: &str = include_str!("../../core/tests/fixtures/papers.jsonl");
const SCRIPT: &str = include_str!("../../core/tests/fixtures/golden_3turn_script.json");

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (index, _) = KgIndex::ingest(Cursor::new(PAPERS))?;
    let tools = Arc::new(build_registry(SharedIndex::new(index), None)?);
    let factory = Arc::new(|| Ok(Arc::new(ScriptedBackend::from_json(SCRIPT)?) as Arc<dyn Backend>));
    let store = SessionStore::new(factory, tools, AgentConfig::default());

    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let url = format!("http://{}", listener.local_addr()?);
    let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(server::serve(listener, server::router(Arc::new(store), &[]), async {
        let _ = stopped.await;
    }));
    println!("listening on {url}");

    let client = reqwest::Client::new();
    let session: Value = client.post(format!("{url}/v1/sessions")).json(&json!({})).send().await?.json().await?;
    let id = session["id"].as_str().unwrap_or_default();
    println!("session {session}");

    let question = "Who wrote \"Attention Is All You Need\" and when was it published?";
    let body = client
        .post(format!("{url}/v1/sessions/{id}/messages"))
        .json(&json!({ "text": question }))
        .send()
        .await?
        .text()
        .await?;
    for event in parse_sse(&body) {
        println!("{} {:?} {}", event.seq, event.kind, event.payload);
    }
    println!("{}", client.get(format!("{url}/v1/sessions/{id}")).send().await?.text().await?);

    let _ = stop.send(());
    server.await??;
    Ok(())
}
