//! Register the two agent tools and dispatch JSON inputs to them.

use std::io::Cursor;

use serde_json::json;
use workbench_core::kg::{KgIndex, SharedIndex};
use workbench_core::tools::{academic_search_spec, web_search_spec, AcademicSearch, StubSearch, ToolRegistry, WebSearchEngine};

const PAPERS: &str = include_str!("../tests/fixtures/papers.jsonl");
const WEB: &str = include_str!("../tests/fixtures/web_stub.json");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (index, _) = KgIndex::ingest(Cursor::new(PAPERS))?;
    let mut tools = ToolRegistry::new();
    tools.register(academic_search_spec(), AcademicSearch::new(SharedIndex::new(index)))?;
    tools.register(web_search_spec(), WebSearchEngine::stub(StubSearch::from_json(WEB)?))?;

    for spec in tools.specs() {
        println!("{}", spec.render());
    }
    let calls = [
        ("AcademicSearch", json!({"title": "Attention Is All You Need", "resultParameters": ["authors", "publishDate"]})),
        ("WebSearchEngine", json!({"query": "CIFAR-10 state of the art"})),
        ("AcademicSearch", json!({"title": "x"})),
        ("Calculator", json!({"expression": "1+1"})),
    ];
    for (name, input) in calls {
        let observation = tools.dispatch(name, input.as_object().unwrap());
        println!("{name} ok={} source={}\n{}\n", observation.ok, observation.source, observation.content);
    }
    Ok(())
}
