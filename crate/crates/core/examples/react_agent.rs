//! Run the ReAct loop against a scripted model and print the streamed trace.

use std::io::Cursor;
use std::sync::Arc;

use workbench_core::agent::{build_system_prompt, trace_to_jsonl, Agent, AgentConfig, DialogueState, EventBody};
use workbench_core::gateway::ScriptedBackend;
use workbench_core::kg::{KgIndex, SharedIndex};
use workbench_core::tools::{academic_search_spec, web_search_spec, AcademicSearch, StubSearch, ToolRegistry, WebSearchEngine};

const PAPERS: &str = include_str!("../tests/fixtures/papers.jsonl");
const WEB: &str = include_str!("../tests/fixtures/web_stub.json");
const SCRIPT: &str = include_str!("../tests/fixtures/golden_3turn_script.json");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (index, _) = KgIndex::ingest(Cursor::new(PAPERS))?;
    let mut tools = ToolRegistry::new();
    tools.register(academic_search_spec(), AcademicSearch::new(SharedIndex::new(index)))?;
    tools.register(web_search_spec(), WebSearchEngine::stub(StubSearch::from_json(WEB)?))?;
    println!("{}\n", build_system_prompt(&tools)?);

    let agent = Agent::new(Arc::new(ScriptedBackend::from_json(SCRIPT)?), Arc::new(tools), AgentConfig::default())?;
    let mut state = DialogueState::new();
    let question = "Who wrote \"Attention Is All You Need\" and when was it published?";
    let outcome = agent.run_episode_with(question, &mut state, &mut |event| match &event.body {
        EventBody::Thought(t) => println!("[{}] thought: {t}", event.step_index),
        EventBody::Action(a) => println!("[{}] action: {} {}", event.step_index, a.action, serde_json::Value::Object(a.action_input.clone())),
        EventBody::Observation(o) => println!("[{}] observation:\n{o}", event.step_index),
        EventBody::FinalAnswer(a) => println!("[{}] answer: {a}", event.step_index),
    })?;
    println!("\ntrace:\n{}", trace_to_jsonl(&outcome.trace));
    Ok(())
}
