#![allow(dead_code)]

#[path = "../../../core/tests/common/mod.rs"]
pub mod shared;

use std::collections::VecDeque;
use std::sync::{Arc, Condvar, Mutex};

use serde_json::{json, Value};
use tokio::sync::oneshot;
use workbench_core::agent::{AgentConfig, FixedClock};
use workbench_core::gateway::{Backend, FnBackend, GatewayError, ScriptedBackend};
use workbench_service::server::{self, parse_sse, StreamEvent};
use workbench_service::session::{BackendFactory, SessionStore};

pub fn store_with(factory: BackendFactory) -> SessionStore {
    SessionStore::new(factory, Arc::new(shared::registry()), AgentConfig::default())
        .with_clock(Arc::new(FixedClock(shared::epoch())))
}

/// Every session replays the golden script from the start.
pub fn golden_store() -> SessionStore {
    let script = shared::golden_backend();
    store_with(Arc::new(move || Ok(Arc::new(script.fresh()) as Arc<dyn Backend>)))
}

/// Sessions get the given backends in creation order.
pub fn queued_factory(backends: Vec<Arc<dyn Backend>>) -> BackendFactory {
    let queue = Mutex::new(VecDeque::from(backends));
    Arc::new(move || {
        queue
            .lock()
            .unwrap()
            .pop_front()
            .ok_or_else(|| GatewayError::Config("no backend left for a new session".into()))
    })
}

pub fn scripted(steps: &[(&str, &str)]) -> Arc<dyn Backend> {
    Arc::new(workbench_core::gateway::make_scripted_backend(steps.iter().copied()).unwrap()) as Arc<dyn Backend>
}

pub fn scripted_json(text: &str) -> Arc<dyn Backend> {
    Arc::new(ScriptedBackend::from_json(text).unwrap())
}

pub fn scripted_owned(steps: Vec<(String, String)>) -> Arc<dyn Backend> {
    let json: Vec<Value> = steps.iter().map(|(m, r)| json!({"matcher": m, "reply": r})).collect();
    scripted_json(&Value::Array(json).to_string())
}

/// Holds every completion until opened.
#[derive(Default)]
pub struct Gate {
    open: Mutex<bool>,
    cv: Condvar,
}

impl Gate {
    pub fn wait(&self) {
        let mut open = self.open.lock().unwrap();
        while !*open {
            open = self.cv.wait(open).unwrap();
        }
    }

    pub fn open(&self) {
        *self.open.lock().unwrap() = true;
        self.cv.notify_all();
    }

    pub fn backend(self: &Arc<Self>, answer: &str) -> Arc<dyn Backend> {
        let gate = self.clone();
        let reply = format!("Final Answer: {answer}");
        Arc::new(FnBackend::new("gated", move |_| {
            gate.wait();
            Ok(reply.clone())
        }))
    }
}

pub struct TestServer {
    pub url: String,
    pub client: reqwest::Client,
    stop: Option<oneshot::Sender<()>>,
}

impl TestServer {
    pub async fn start(store: SessionStore) -> Self {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let (stop, stopped) = oneshot::channel::<()>();
        let app = server::router(Arc::new(store), &[]);
        tokio::spawn(server::serve(listener, app, async {
            let _ = stopped.await;
        }));
        TestServer {
            url,
            client: reqwest::Client::new(),
            stop: Some(stop),
        }
    }

    pub async fn create(&self, body: Value) -> String {
        let resp = self.client.post(format!("{}/v1/sessions", self.url)).json(&body).send().await.unwrap();
        assert_eq!(resp.status(), 201);
        let view: Value = resp.json().await.unwrap();
        view["id"].as_str().unwrap().to_string()
    }

    pub async fn send(&self, id: &str, text: &str) -> reqwest::Response {
        self.client
            .post(format!("{}/v1/sessions/{id}/messages", self.url))
            .json(&json!({ "text": text }))
            .send()
            .await
            .unwrap()
    }

    pub async fn ask(&self, id: &str, text: &str) -> Vec<StreamEvent> {
        let resp = self.send(id, text).await;
        assert_eq!(resp.status(), 200);
        parse_sse(&resp.text().await.unwrap())
    }

    pub async fn get(&self, path: &str) -> reqwest::Response {
        self.client.get(format!("{}{path}", self.url)).send().await.unwrap()
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
    }
}
