mod common;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::json;
use workbench_core::bench::{build_dataset, write_items, ItemMode};
use workbench_core::eval::{
    build_fewshot_prompt, evaluate, evaluate_with, exemplars_for, extract_answer, load_task, EvalError, EvalFormat,
    EvalOptions, PUBMEDQA_SUBJECT,
};
use workbench_core::gateway::{FnBackend, GatewayError};

use common::synth;

fn write(path: &Path, text: &str) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, text).unwrap();
}

fn mc_rows(subject: &str, n: usize, header: bool) -> String {
    let mut out = String::new();
    if header {
        out.push_str("id,question,A,B,C,D,answer,explanation\n");
    }
    for i in 0..n {
        let id = if header { format!("{i},") } else { String::new() };
        let gold = ["A", "B", "C", "D"][i % 4];
        out.push_str(&format!("{id}\"{subject} question {i}, with a comma?\",w{i},x{i},y{i},z{i},{gold}"));
        if header {
            out.push_str(",because");
        }
        out.push('\n');
    }
    out
}

#[test]
fn mmlu_layout() {
    let dir = tempfile::tempdir().unwrap();
    for (subject, n) in [("anatomy", 7), ("college_physics", 3)] {
        write(&dir.path().join(format!("dev/{subject}_dev.csv")), &mc_rows(subject, 5, false));
        write(&dir.path().join(format!("test/{subject}_test.csv")), &mc_rows(subject, n, false));
    }
    let task = load_task(EvalFormat::Mmlu, dir.path(), None).unwrap();
    assert_eq!(task.n_shots, 5);
    assert_eq!(task.total_items(), 10);
    assert_eq!(task.subjects, ["anatomy", "college_physics"]);
    assert_eq!(task.source_counts, BTreeMap::from([("anatomy".into(), 7), ("college_physics".into(), 3)]));
    assert_eq!(task.test_items[1].question, "anatomy question 1, with a comma?");
    assert_eq!(task.test_items[1].gold, "B");
    assert!(task.excluded.is_empty());
}

#[test]
fn mmlu_prompt_golden() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("dev/high_school_biology_dev.csv"), &mc_rows("bio", 2, false));
    write(&dir.path().join("test/high_school_biology_test.csv"), "What carries oxygen?,Plasma,Hemoglobin,Bile,Lymph,B\n");
    let task = load_task(EvalFormat::Mmlu, dir.path(), Some(2)).unwrap();
    let item = &task.test_items[0];
    let expected = "The following are multiple choice questions (with answers) about high school biology.\n\n\
bio question 0, with a comma?\nA. w0\nB. x0\nC. y0\nD. z0\nAnswer: A\n\n\
bio question 1, with a comma?\nA. w1\nB. x1\nC. y1\nD. z1\nAnswer: B\n\n\
What carries oxygen?\nA. Plasma\nB. Hemoglobin\nC. Bile\nD. Lymph\nAnswer:";
    assert_eq!(build_fewshot_prompt(&task, &item.subject, item), expected);
}

#[test]
fn ceval_layout_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let subjects = ["accountant", "computer_network", "physician"];
    for (i, subject) in subjects.iter().enumerate() {
        write(&dir.path().join(format!("dev/{subject}_dev.csv")), &mc_rows(&format!("{subject} dev"), 5, true));
        write(&dir.path().join(format!("val/{subject}_val.csv")), &mc_rows(subject, 10 + i, true));
    }
    let task = load_task(EvalFormat::Ceval, dir.path(), None).unwrap();
    assert_eq!(task.total_items(), 33);
    assert_eq!(task.subjects.len(), 3);
    let item = &task.test_items[0];
    assert_eq!(item.question, "accountant question 0, with a comma?");
    assert_eq!(item.options.as_ref().unwrap()[0], "w0");
    assert_eq!(exemplars_for(&task, item).len(), 5);
}

#[test]
fn malformed_csv_reports_file_and_row() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("dev/law_dev.csv"), &mc_rows("law", 5, true));
    write(&dir.path().join("val/law_val.csv"), &format!("{}9,q,a,b,c,d,E\n", mc_rows("law", 2, true)));
    match load_task(EvalFormat::Ceval, dir.path(), None) {
        Err(EvalError::Malformed { file, row, .. }) => {
            assert!(file.ends_with("law_val.csv"));
            assert_eq!(row, 4);
        }
        other => panic!("{other:?}"),
    }
}

fn pubmed_json(n: usize, offset: usize) -> String {
    let decisions = ["yes", "no", "maybe"];
    let map: serde_json::Map<String, serde_json::Value> = (0..n)
        .map(|i| {
            (
                format!("{}", 10_000 + offset + i),
                json!({
                    "QUESTION": format!("Does treatment {} help?", offset + i),
                    "CONTEXTS": [format!("Trial {} enrolled patients.", offset + i), "Outcomes were measured."],
                    "final_decision": decisions[i % 3].to_uppercase(),
                }),
            )
        })
        .collect();
    serde_json::Value::Object(map).to_string()
}

#[test]
fn pubmedqa_reserves_exemplars_without_dev() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("ori_pqal.json"), &pubmed_json(12, 0));
    let task = load_task(EvalFormat::Pubmedqa, dir.path(), None).unwrap();
    assert_eq!(task.choice_labels, ["yes", "no", "maybe"]);
    assert_eq!(task.total_items(), 7);
    assert_eq!(task.excluded, BTreeMap::from([(PUBMEDQA_SUBJECT.to_string(), 5)]));
    let item = &task.test_items[0];
    let prompt = build_fewshot_prompt(&task, PUBMEDQA_SUBJECT, item);
    let blocks: Vec<&str> = prompt.split("\n\n").collect();
    assert_eq!(blocks.len(), 7);
    assert_eq!(blocks[0], "The following are multiple choice questions (with answers) about biomedical research.");
    assert_eq!(
        blocks[1],
        "Context: Trial 0 enrolled patients. Outcomes were measured.\nQuestion: Does treatment 0 help?\nAnswer: yes"
    );
    assert_eq!(
        blocks[6],
        "Context: Trial 5 enrolled patients. Outcomes were measured.\nQuestion: Does treatment 5 help?\nAnswer:"
    );
}

#[test]
fn pubmedqa_uses_dev_file_when_present() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("test.json"), &pubmed_json(6, 0));
    write(&dir.path().join("dev.json"), &pubmed_json(5, 100));
    let task = load_task(EvalFormat::Pubmedqa, dir.path(), None).unwrap();
    assert_eq!(task.total_items(), 6);
    assert!(task.excluded.is_empty());
}

fn scieval_rows(category: &str, mc: usize, judge: usize) -> Vec<serde_json::Value> {
    let mut rows = Vec::new();
    for i in 0..mc {
        let gold = ["A", "B", "C", "D"][i % 4];
        rows.push(json!({
            "question": format!("{category} fact {i}?\nA. one\nB. two\nC. three\nD. four"),
            "answer": [gold],
            "type": "multiple-choice",
            "category": category,
        }));
    }
    for i in 0..judge {
        rows.push(json!({"question": format!("Is {category} {i} true?"), "answer": ["yes"], "type": "judge", "category": category}));
    }
    rows
}

#[test]
fn scieval_counts_and_shots() {
    let dir = tempfile::tempdir().unwrap();
    let mut rows = scieval_rows("biology", 8, 2);
    rows.extend(scieval_rows("chemistry", 6, 1));
    write(&dir.path().join("scieval-valid.json"), &serde_json::Value::Array(rows).to_string());
    let task = load_task(EvalFormat::Scieval, dir.path(), None).unwrap();
    assert_eq!(task.n_shots, 3);
    assert_eq!(task.source_counts, BTreeMap::from([("biology".into(), 10), ("chemistry".into(), 7)]));
    assert_eq!(task.excluded, BTreeMap::from([("biology".into(), 5), ("chemistry".into(), 4)]));
    assert_eq!(task.total_items(), 8);
    let item = &task.test_items[0];
    assert_eq!(item.question, "biology fact 3?");
    assert_eq!(item.options.as_deref().unwrap(), ["one", "two", "three", "four"]);
    let prompt = build_fewshot_prompt(&task, &item.subject, item);
    assert!(prompt.ends_with("biology fact 3?\nA. one\nB. two\nC. three\nD. four\nAnswer:"), "{prompt}");
    assert_eq!(prompt.matches("Answer: ").count(), 3);
}

#[test]
fn csqa_from_bench_items() {
    let dir = tempfile::tempdir().unwrap();
    let (items, _) = build_dataset(&synth::methods(40, 41), &synth::datasets(40, 42), 1, ItemMode::OnePerRecord);
    let mut buf = Vec::new();
    write_items(&items, &mut buf).unwrap();
    write(&dir.path().join("bench.jsonl"), &String::from_utf8(buf).unwrap());
    let task = load_task(EvalFormat::Csqa, dir.path(), None).unwrap();
    assert_eq!(task.n_shots, 3);
    assert_eq!(task.total_items() + task.excluded.values().sum::<usize>(), 80);
    assert_eq!(task.subjects, ["dataset_intro", "dataset_refer", "method_intro", "method_refer"]);
}

#[test]
fn shots_are_checked() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("dev/a_dev.csv"), &mc_rows("a", 2, false));
    write(&dir.path().join("test/a_test.csv"), &mc_rows("a", 2, false));
    assert!(matches!(load_task(EvalFormat::Mmlu, dir.path(), None), Err(EvalError::Config(_))));
    assert!(load_task(EvalFormat::Mmlu, dir.path(), Some(2)).is_ok());
}

/// Boundary-aware label scan written independently of the library.
fn extract_oracle(text: &str, labels: &[&str]) -> Option<String> {
    let word = |c: char| c.is_alphanumeric() || c == '_';
    let tokens: Vec<(usize, &str)> = {
        let mut out = Vec::new();
        let mut start = None;
        for (i, c) in text.char_indices() {
            match (word(c), start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    out.push((s, &text[s..i]));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push((s, &text[s..]));
        }
        out
    };
    tokens.iter().find_map(|(_, tok)| {
        labels
            .iter()
            .find(|l| if l.len() > 1 { tok.eq_ignore_ascii_case(l) } else { tok == *l })
            .map(|l| l.to_string())
    })
}

#[test]
fn extraction_matches_oracle() {
    let pieces = [
        "A", "B", "C", "D", "a", "b", "The", "answer", "is", "(C)", "Answer:", "yes", "No", "MAYBE", "nob", "Abc", "D.",
        "B,", "\n", "option", "x", "[A]", "none", "maybes",
    ];
    let abcd = ["A", "B", "C", "D"];
    let ynm = ["yes", "no", "maybe"];
    let mut rng = synth::rng(43);
    for _ in 0..1000 {
        let n = rng.gen_range(0..8);
        let text: Vec<&str> = (0..n).map(|_| *pieces.choose(&mut rng).unwrap()).collect();
        let text = text.join(if rng.gen_bool(0.5) { " " } else { "" });
        for labels in [&abcd[..], &ynm[..]] {
            let owned: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
            assert_eq!(extract_answer(&text, &owned), extract_oracle(&text, labels), "{text:?}");
        }
    }
}

#[test]
fn gold_backend_scores_one() {
    let task = synth::eval_task(600, 44);
    let table = synth::eval_gold_table(&task);
    let backend = FnBackend::new("gold", move |r| Ok(table[&r.prompt].clone()));
    let report = evaluate(&task, &backend, 0).unwrap();
    assert_eq!(report.overall.correct, 600);
    assert_eq!(report.overall.accuracy, 1.0);
    assert_eq!(report.macro_accuracy, 1.0);
    assert!(report.per_subject.values().all(|t| t.accuracy == 1.0));
}

#[test]
fn adversarial_backend_scores_zero() {
    let task = synth::eval_task(300, 45);
    let table: HashMap<String, String> = task
        .test_items
        .iter()
        .map(|i| {
            let wrong = ["A", "B", "C", "D"].iter().find(|l| **l != i.gold).unwrap();
            (build_fewshot_prompt(&task, &i.subject, i), wrong.to_string())
        })
        .collect();
    let backend = FnBackend::new("adversary", move |r| Ok(table[&r.prompt].clone()));
    let report = evaluate(&task, &backend, 0).unwrap();
    assert_eq!(report.overall.correct, 0);
    assert_eq!(report.unparsed_count, 0);
}

#[test]
fn random_backend_is_near_chance() {
    let n = 3000;
    let task = synth::eval_task(n, 46);
    let rng = Mutex::new(synth::rng(47));
    let backend = FnBackend::new("uniform", move |_| {
        Ok(["A", "B", "C", "D"][rng.lock().unwrap().gen_range(0..4)].to_string())
    });
    let report = evaluate(&task, &backend, 0).unwrap();
    let bound = 3.0 * (0.1875 / n as f64).sqrt();
    assert!((report.overall.accuracy - 0.25).abs() <= bound, "{}", report.overall.accuracy);
}

#[test]
fn scores_do_not_depend_on_order_or_parallelism() {
    let task = synth::eval_task(200, 48);
    let table = synth::eval_gold_table(&task);
    let backend = FnBackend::new("half", move |r| {
        let gold = &table[&r.prompt];
        Ok(if r.prompt.len() % 2 == 0 { gold.clone() } else { "none".into() })
    });
    let base = evaluate(&task, &backend, 0).unwrap();
    let parallel = evaluate_with(&task, &backend, &EvalOptions { parallelism: 8, ..EvalOptions::default() }).unwrap();
    assert_eq!(base.items, parallel.items);
    assert_eq!(base.per_subject, parallel.per_subject);

    let mut shuffled = task.clone();
    shuffled.test_items.shuffle(&mut synth::rng(49));
    let again = evaluate(&shuffled, &backend, 0).unwrap();
    assert_eq!(base.per_subject, again.per_subject);
    assert_eq!(base.overall, again.overall);
    assert!(base.unparsed_count > 0);
}

#[test]
fn exemplars_never_include_the_item() {
    let mut task = synth::eval_task(30, 50);
    // Put a test item into its own subject's pool.
    let item = task.test_items[0].clone();
    task.dev_pool.get_mut(&item.subject).unwrap().insert(0, item.clone());
    let shown = exemplars_for(&task, &item);
    assert_eq!(shown.len(), 3);
    assert!(shown.iter().all(|ex| ex.question != item.question));
    let prompt = build_fewshot_prompt(&task, &item.subject, &item);
    assert_eq!(prompt.matches(&item.question).count(), 1);
    for other in &task.test_items[1..] {
        let prompt = build_fewshot_prompt(&task, &other.subject, other);
        for ex in task.dev_pool[&other.subject].iter().take(3) {
            if ex.question != other.question {
                assert!(prompt.contains(&ex.question));
            }
        }
    }
}

#[test]
fn backend_failure_returns_partial_report() {
    let task = synth::eval_task(20, 51);
    let calls = AtomicUsize::new(0);
    let backend = FnBackend::new("flaky", move |_| {
        if calls.fetch_add(1, Ordering::SeqCst) == 12 {
            Err(GatewayError::BadResponse("rate limited".into()))
        } else {
            Ok("A".into())
        }
    });
    match evaluate(&task, &backend, 0) {
        Err(EvalError::Backend { partial, .. }) => {
            assert_eq!(partial.overall.total, 12);
            assert_eq!(partial.items.iter().map(|i| i.index).collect::<Vec<_>>(), (0..12).collect::<Vec<_>>());
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn report_records_run_metadata() {
    let task = synth::eval_task(3, 52);
    let backend = FnBackend::new("fixed", |_| Ok("B".into()));
    let report = evaluate(&task, &backend, 9).unwrap();
    let json: serde_json::Value = serde_json::from_str(&report.to_json_pretty()).unwrap();
    assert_eq!(json["metadata"]["backend"], "fixed");
    assert_eq!(json["metadata"]["shots"], 3);
    assert_eq!(json["metadata"]["seed"], 9);
    assert_eq!(json["overall"]["total"], 3);
}
