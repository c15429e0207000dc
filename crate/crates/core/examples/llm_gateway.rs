//! Completion backends: a replayed script, a closure, and stop handling.
//!
//! Set `LLM_URL` (and optionally `LLM_MODEL`, `LLM_TOKEN`) to also query a
//! real completion endpoint.

use std::time::Duration;

use workbench_core::gateway::{
    make_scripted_backend, truncate_at_stop, Backend, CompletionRequest, FnBackend, HttpBackend,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let script = make_scripted_backend([
        ("capital of France", "Paris.\nObservation: cut here"),
        ("And of Italy", "Rome."),
    ])?;
    for prompt in ["What is the capital of France?", "And of Italy?"] {
        let request = CompletionRequest::new(prompt).with_stop("Observation:");
        let response = script.complete(&request)?;
        println!("{} -> {:?} ({:?})", script.id(), response.text, response.finish_reason);
    }
    println!("script exhausted: {}", script.complete(&CompletionRequest::new("more?")).is_err());

    let echo = FnBackend::new("echo", |r: &CompletionRequest| Ok(r.prompt.to_uppercase()));
    println!("{} -> {}", echo.id(), echo.complete(&CompletionRequest::new("shout"))?.text);

    let stops = vec!["\nObservation:".to_string()];
    println!("{:?}", truncate_at_stop("Thought: t\nObservation: x", &stops));

    if let Ok(url) = std::env::var("LLM_URL") {
        let model = std::env::var("LLM_MODEL").unwrap_or_else(|_| "default".into());
        let http = HttpBackend::new(url, model, std::env::var("LLM_TOKEN").ok(), Duration::from_secs(60))?;
        let response = http.complete(&CompletionRequest::new("Say hello.").with_max_tokens(16))?;
        println!("{} -> {:?}", http.id(), response.text);
    }
    Ok(())
}
