mod common;

use std::sync::Arc;
use std::time::Duration;

use serde_json::{json, Map, Value};
use workbench_core::agent::build_system_prompt;
use workbench_core::tools::{
    academic_search_spec, web_search_spec, HttpSearch, RegistryError, StubSearch, ToolObservation, ToolRegistry,
    WebSearchEngine, NO_MATCHES, SEARCH_UNAVAILABLE, TRUNCATION_MARKER,
};

use common::*;

fn input(value: Value) -> Map<String, Value> {
    value.as_object().unwrap().clone()
}

#[test]
fn register_and_lookup() {
    let reg = registry();
    assert!(reg.lookup("AcademicSearch").is_some());
    assert_eq!(reg.names(), ["AcademicSearch", "WebSearchEngine"]);
    let prompt = build_system_prompt(&reg).unwrap();
    assert!(prompt.find("AcademicSearch:\n").unwrap() < prompt.find("WebSearchEngine:\n").unwrap());
}

#[test]
fn duplicate_registration_fails() {
    let mut reg = registry();
    let err = reg
        .register(academic_search_spec(), |_: &Map<String, Value>| Ok::<_, String>(String::new()))
        .unwrap_err();
    assert!(matches!(err, RegistryError::Duplicate(ref n) if n == "AcademicSearch"), "{err:?}");
}

#[test]
fn academic_search_figure_example() {
    let obs = registry().dispatch(
        "AcademicSearch",
        &input(json!({"title": "Attention Is All You Need", "resultParameters": ["authors", "publishDate", "abstracts"]})),
    );
    assert!(obs.ok);
    assert_eq!(obs.source, "AcademicSearch");
    let first = obs.content.split("\n2. ").next().unwrap();
    assert!(first.starts_with("1. authors: Ashish Vaswani"), "{first}");
    assert!(first.contains("publishDate: 2017/06/12"));
    assert!(first.contains("abstracts: The dominant sequence transduction models"));
    assert!(!first.contains("venue"));
}

#[test]
fn academic_search_no_hits_is_ok() {
    let obs = registry().dispatch(
        "AcademicSearch",
        &input(json!({"title": "zzzz qqqq", "resultParameters": ["title"]})),
    );
    assert!(obs.ok);
    assert_eq!(obs.content, NO_MATCHES);
}

#[test]
fn academic_search_requires_result_parameters() {
    let reg = registry();
    for bad in [json!({"resultParameters": []}), json!({"title": "x"})] {
        let obs = reg.dispatch("AcademicSearch", &input(bad));
        assert!(!obs.ok);
        assert!(obs.content.contains("resultParameters"), "{}", obs.content);
    }
}

#[test]
fn academic_search_date_range() {
    let obs = registry().dispatch(
        "AcademicSearch",
        &input(json!({"publishDate": {"gte": "2019/01/01"}, "resultParameters": ["title", "publishDate"], "sort_by": {"publishDate": "asc"}})),
    );
    assert!(obs.ok);
    assert!(!obs.content.contains("2017/") && !obs.content.contains("2018/"), "{}", obs.content);
}

#[test]
fn web_search_renders_stub_results() {
    let obs = registry().dispatch("WebSearchEngine", &input(json!({"query": "xxx"})));
    assert!(obs.ok);
    assert_eq!(
        obs.content,
        "1. First result\nFirst snippet.\nURL: https://example.org/one\n\n2. Second result\nSecond snippet.\nURL: https://example.org/two"
    );
}

#[test]
fn paperswithcode_leaderboard_is_extracted() {
    let obs = registry().dispatch("WebSearchEngine", &input(json!({"query": "CIFAR-10 state of the art"})));
    assert!(obs.ok);
    let first_row = obs.content.lines().find(|l| l.starts_with("Rank 1")).unwrap();
    assert!(first_row.contains("Percentage correct 99.5"), "{first_row}");
    assert!(first_row.contains("PARAMS 632M"));
    assert!(first_row.contains("Paper: An Image is Worth 16x16 Words"));
    assert!(!obs.content.contains("The current state-of-the-art on CIFAR-10."));
}

#[test]
fn failing_search_is_an_observation() {
    let obs = registry().dispatch("WebSearchEngine", &input(json!({"query": "broken query"})));
    assert!(!obs.ok);
    assert!(obs.content.starts_with(SEARCH_UNAVAILABLE));
}

#[test]
fn http_500_is_an_observation() {
    let (url, server) = http_stub(vec![(500, "text/plain", "oops".into())]);
    let engine = WebSearchEngine::new(Arc::new(HttpSearch::new(url, None, Duration::from_secs(5)).unwrap()), None);
    let mut reg = ToolRegistry::new();
    reg.register(web_search_spec(), engine).unwrap();
    let obs = reg.dispatch("WebSearchEngine", &input(json!({"query": "xxx"})));
    assert!(!obs.ok);
    assert!(obs.content.contains(SEARCH_UNAVAILABLE) && obs.content.contains("500"), "{}", obs.content);
    server.join().unwrap();
}

#[test]
fn http_search_reads_bing_style_bodies() {
    let body = json!({"webPages": {"value": [
        {"name": "A", "snippet": "a", "url": "https://a.example"},
        {"name": "B", "snippet": "b", "url": "https://b.example"}
    ]}});
    let (url, server) = http_stub(vec![(200, "application/json", body.to_string())]);
    let engine = WebSearchEngine::new(Arc::new(HttpSearch::new(url, None, Duration::from_secs(5)).unwrap()), None);
    let text = engine.search("graph neural networks").unwrap();
    assert!(text.starts_with("1. A\na\nURL: https://a.example\n\n2. B"), "{text}");
    let requests = server.join().unwrap();
    assert!(requests[0].starts_with("GET /?q=graph+neural+networks&count=5"), "{}", requests[0]);
}

#[test]
fn top_n_limits_results() {
    let results: Vec<Value> = (0..9)
        .map(|i| json!({"title": format!("t{i}"), "snippet": "s", "url": format!("https://x.example/{i}")}))
        .collect();
    let stub: StubSearch = serde_json::from_value(json!({"queries": {"q": results}})).unwrap();
    let text = WebSearchEngine::stub(stub.clone()).search("q").unwrap();
    assert_eq!(text.matches("URL: ").count(), 5);
    let text = WebSearchEngine::stub(stub).with_top_n(2).search("q").unwrap();
    assert_eq!(text.matches("URL: ").count(), 2);
}

#[test]
fn observation_cap_and_marker() {
    for len in [0usize, 1, 99, 100, 101, 5000] {
        let obs = ToolObservation::capped(true, "x".repeat(len), "T", 100);
        assert!(obs.content.chars().count() <= 100);
        assert!(!obs.content.is_empty());
        assert_eq!(obs.content.ends_with(TRUNCATION_MARKER), len > 100, "len {len}");
        assert_eq!(obs.is_truncated(), len > 100);
    }
    let mut reg = ToolRegistry::new().with_cap(50);
    reg.register(web_search_spec(), WebSearchEngine::stub(web_stub())).unwrap();
    let obs = reg.dispatch("WebSearchEngine", &input(json!({"query": "CIFAR-10 state of the art"})));
    assert!(obs.content.chars().count() <= 50 && obs.is_truncated());
}
