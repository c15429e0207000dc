mod common;

use std::path::Path;

use serde_json::{json, Value};
use workbench_core::bench::parse_items;
use workbench_service::cli;

use common::shared::{self, synth};

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn run_with_input(args: &[&str], input: &str) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut argv = vec!["workbench"];
    argv.extend_from_slice(args);
    let code = cli::run(argv, &mut input.as_bytes(), &mut out, &mut err);
    Run {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn run(args: &[&str]) -> Run {
    run_with_input(args, "")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_lines(p: &Path, rows: &[Value]) {
    std::fs::write(p, rows.iter().map(|r| r.to_string() + "\n").collect::<String>()).unwrap();
}

fn read_lines(p: &Path) -> Vec<Value> {
    std::fs::read_to_string(p)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn usage_errors_exit_two() {
    let r = run(&[]);
    assert_eq!(r.code, 2);
    assert!(r.err.contains("Usage"), "{}", r.err);
    assert_eq!(run(&["bench"]).code, 2);
    assert_eq!(run(&["bench", "build"]).code, 2);
    assert_eq!(run(&["nonsense"]).code, 2);
}

#[test]
fn every_subcommand_has_help() {
    for args in [
        &["agent", "chat", "--help"][..],
        &["kg", "ingest", "--help"],
        &["kg", "search", "--help"],
        &["kg", "similar", "--help"],
        &["bench", "build", "--help"],
        &["bench", "eval", "--help"],
        &["review", "clean", "--help"],
        &["review", "sft", "--help"],
        &["review", "metrics", "--help"],
        &["corpus", "label", "--help"],
        &["corpus", "filter", "--help"],
        &["corpus", "sft-gen", "--help"],
        &["serve", "--help"],
    ] {
        let r = run(args);
        assert_eq!(r.code, 0, "{args:?}: {}", r.err);
        assert!(r.out.contains("Usage"), "{args:?}");
    }
}

#[test]
fn bench_build_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let methods = dir.path().join("methods.jsonl");
    let datasets = dir.path().join("datasets.jsonl");
    write_lines(&methods, &synth::methods(60, 1).iter().map(|m| json!(m)).collect::<Vec<_>>());
    write_lines(&datasets, &synth::datasets(40, 2).iter().map(|d| json!(d)).collect::<Vec<_>>());
    let build = |name: &str, seed: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args = vec!["bench", "build", "--methods", path(&methods), "--datasets", path(&datasets), "--seed", seed, "--out", path(&out)];
        args.extend_from_slice(extra);
        let r = run(&args);
        assert_eq!(r.code, 0, "{}", r.err);
        (std::fs::read(&out).unwrap(), r.out)
    };
    let (a, stdout) = build("a.jsonl", "9", &[]);
    let (b, _) = build("b.jsonl", "9", &[]);
    let (c, _) = build("c.jsonl", "10", &[]);
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(stdout.contains("wrote 200 items"), "{stdout}");
    assert_eq!(parse_items(a.as_slice()).unwrap().len(), 200);
    let (one, _) = build("one.jsonl", "9", &["--one-per-record"]);
    assert_eq!(parse_items(one.as_slice()).unwrap().len(), 100);
}

#[test]
fn bench_build_needs_an_input() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(&["bench", "build", "--out", path(&dir.path().join("x.jsonl"))]);
    assert_eq!(r.code, 1);
    assert!(r.err.contains("--methods"), "{}", r.err);
}

#[test]
fn kg_ingest_search_and_similar() {
    let dir = tempfile::tempdir().unwrap();
    let index = dir.path().join("index.json");
    let fixture = shared::fixture("papers.jsonl");
    let r = run(&["kg", "ingest", "--in", path(&fixture), "--out", path(&index)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("rejected 0"), "{}", r.out);

    let query = json!({"title": "Attention Is All You Need", "resultParameters": ["title", "publishDate"], "limit": 1}).to_string();
    let r = run(&["kg", "search", "--index", path(&index), "--query", &query, "--json"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let hits: Value = serde_json::from_str(&r.out).unwrap();
    assert_eq!(hits[0]["record"]["title"], "Attention Is All You Need");

    let id = read_lines(&fixture)[0]["id"].as_str().unwrap().to_string();
    let r = run(&["kg", "similar", "--index", path(&index), "--id", &id, "--k", "3"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.lines().count() <= 3);

    let r = run(&["kg", "search", "--index", path(&index), "--query", "{\"title\": \"x\", \"resultParameters\": []}"]);
    assert_eq!(r.code, 1);
}

#[test]
fn agent_chat_replays_the_golden_episode() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.jsonl");
    let script = shared::fixture("golden_3turn_script.json");
    let papers = shared::fixture("papers.jsonl");
    let r = run(&[
        "agent",
        "chat",
        "--script",
        path(&script),
        "--kg",
        path(&papers),
        "--trace-out",
        path(&trace),
        "-q",
        shared::GOLDEN_QUESTION,
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("Ashish Vaswani"), "{}", r.out);
    let kinds: Vec<String> = read_lines(&trace).iter().map(|e| e["kind"].as_str().unwrap().to_string()).collect();
    assert_eq!(kinds, ["thought", "action", "observation", "final_answer"]);
}

#[test]
fn agent_chat_reads_stdin_until_exit() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("script.json");
    std::fs::write(
        &script,
        json!([{"matcher": "User: hi", "reply": "Final Answer: hello"}, {"matcher": "User: again", "reply": "Final Answer: still here"}]).to_string(),
    )
    .unwrap();
    let r = run_with_input(&["agent", "chat", "--script", path(&script)], "hi\n\nagain\nexit\nnever\n");
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("hello") && r.out.contains("still here"), "{}", r.out);
}

#[test]
fn review_metrics_table_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("pred.jsonl");
    let meta = dir.path().join("meta.jsonl");
    write_lines(
        &meta,
        &[
            json!({"paper_id": "1", "decision": "accept", "aspects": ["clarity", "originality"]}),
            json!({"paper_id": "2", "decision": "reject", "aspects": ["soundness"]}),
            json!({"paper_id": "3", "decision": "reject"}),
        ],
    );
    write_lines(
        &pred,
        &[
            json!({"paper_id": "1", "recommendation": "accept", "aspects": ["clarity", "substance"]}),
            json!({"paper_id": "2", "recommendation": "accept", "aspects": ["soundness"]}),
            json!({"paper_id": "3", "recommendation": "reject", "aspects": ["motivation"]}),
        ],
    );
    let r = run(&["review", "metrics", "--pred", path(&pred), "--meta", path(&meta)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("2/3 = 0.6667"), "{}", r.out);
    assert!(r.out.contains("2/4 = 0.5000"), "{}", r.out);
    let r = run(&["review", "metrics", "--pred", path(&pred), "--meta", path(&meta), "--json"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let _: Value = serde_json::from_str(&r.out).unwrap();
}

#[test]
fn review_clean_and_sft() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("reviews.jsonl");
    let meta = dir.path().join("meta.jsonl");
    let kept = dir.path().join("kept.jsonl");
    let removed = dir.path().join("removed.jsonl");
    let words = |n: usize| (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
    write_lines(
        &input,
        &[
            json!({"paper_id": "p", "text": words(150), "recommendation": "accept", "confidence": 4}),
            json!({"paper_id": "p", "text": words(20), "recommendation": "accept", "confidence": 4}),
            json!({"paper_id": "p", "text": words(160), "recommendation": "reject", "confidence": 1}),
        ],
    );
    write_lines(&meta, &[json!({"paper_id": "p", "decision": "accept"})]);
    let r = run(&["review", "clean", "--in", path(&input), "--meta", path(&meta), "--out", path(&kept), "--removed", path(&removed)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("kept 1, removed 2"), "{}", r.out);
    assert_eq!(read_lines(&kept).len(), 1);
    assert_eq!(read_lines(&removed).len(), 2);

    let pairs = dir.path().join("pairs.jsonl");
    let sft = dir.path().join("sft.jsonl");
    write_lines(
        &pairs,
        &[json!({"paper_text": "Under review as a conference paper at ICLR 2020Title: T", "review_text": "Good."})],
    );
    let r = run(&["review", "sft", "--in", path(&pairs), "--out", path(&sft)]);
    assert_eq!(r.code, 0, "{}", r.err);
    let rows = read_lines(&sft);
    assert!(rows[0]["prompt"].as_str().unwrap().ends_with("This is the paper for your review: Title: T"));
    assert_eq!(rows[0]["output"], "Good.");
}

#[test]
fn corpus_label_filter_and_generation() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("samples.jsonl");
    let labeled = dir.path().join("labeled.jsonl");
    let kept = dir.path().join("kept.jsonl");
    let script = dir.path().join("judge.json");
    write_lines(&samples, &[json!({"text": "good sample"}), json!({"text": "bad sample"}), json!({"text": "odd sample"})]);
    let verdict = |q: &str, s: &str| {
        json!({"Quality": q, "Domain": "Computer Science", "Depth": "Expert", "Category": "Academic Article", "Suitability": s}).to_string()
    };
    std::fs::write(
        &script,
        json!([
            {"matcher": "good sample", "reply": verdict("Excellent", "Highly Suitable")},
            {"matcher": "bad sample", "reply": verdict("Poor", "Not Suitable")},
            {"matcher": "odd sample", "reply": "I cannot judge this."},
        ])
        .to_string(),
    )
    .unwrap();
    let r = run(&["corpus", "label", "--in", path(&samples), "--out", path(&labeled), "--script", path(&script)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("labeled 3 samples (1 without a valid verdict)"), "{}", r.out);
    let r = run(&["corpus", "filter", "--in", path(&labeled), "--out", path(&kept)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("kept 1 of 3 (1 without a valid verdict)"), "{}", r.out);
    assert_eq!(read_lines(&kept)[0]["text"], "good sample");

    let records = dir.path().join("records.jsonl");
    let generated = dir.path().join("generated.jsonl");
    write_lines(
        &records,
        &[json!({"introduction": "Intro text.", "experiments": "We ran things.", "title": "A Title", "abstract": "An abstract."})],
    );
    let r = run(&["corpus", "sft-gen", "--in", path(&records), "--out", path(&generated), "--sections", "experiments"]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(
        read_lines(&generated)[0]["text"],
        "Intro text.\nWe ran things.<begin_generate>Title:A Title;Abstract:An abstract."
    );
}

#[test]
fn bench_eval_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("mmlu");
    std::fs::create_dir_all(data.join("dev")).unwrap();
    std::fs::create_dir_all(data.join("test")).unwrap();
    let rows = |n: usize| (0..n).map(|i| format!("Q{i}?,a,b,c,d,A\n")).collect::<String>();
    std::fs::write(data.join("dev/algebra_dev.csv"), rows(5)).unwrap();
    std::fs::write(data.join("test/algebra_test.csv"), rows(4)).unwrap();
    let script = dir.path().join("always_a.json");
    let steps: Vec<Value> = (0..4).map(|_| json!({"matcher": "Answer:", "reply": " A"})).collect();
    std::fs::write(&script, Value::Array(steps).to_string()).unwrap();
    let report = dir.path().join("report.json");
    let r = run(&["bench", "eval", "--task", "mmlu", "--path", path(&data), "--report", path(&report), "--script", path(&script)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("overall (micro): 4/4 = 1.0000"), "{}", r.out);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(report["overall"]["correct"], 4);
}
