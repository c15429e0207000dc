//! Few-shot multiple-choice evaluation of a backend on an in-memory task.
//!
//! Pass a directory in MMLU layout (`dev/*_dev.csv`, `test/*_test.csv`) to
//! evaluate on files instead.

use std::collections::BTreeMap;
use std::path::Path;

use workbench_core::eval::{build_fewshot_prompt, evaluate, load_task, EvalFormat, EvalTask, QAItem};
use workbench_core::gateway::{CompletionRequest, FnBackend};

fn item(subject: &str, question: &str, options: [&str; 4], gold: &str) -> QAItem {
    QAItem {
        subject: subject.into(),
        question: question.into(),
        options: Some(options.iter().map(|s| s.to_string()).collect()),
        context: None,
        gold: gold.into(),
    }
}

fn demo_task() -> EvalTask {
    let s = "arithmetic";
    EvalTask {
        name: "demo".into(),
        n_shots: 2,
        choice_labels: ["A", "B", "C", "D"].iter().map(|s| s.to_string()).collect(),
        subjects: vec![s.into()],
        dev_pool: BTreeMap::from([(
            s.to_string(),
            vec![item(s, "1 + 1 = ?", ["2", "3", "4", "5"], "A"), item(s, "2 + 2 = ?", ["1", "4", "3", "8"], "B")],
        )]),
        test_items: vec![
            item(s, "3 + 3 = ?", ["5", "7", "6", "9"], "C"),
            item(s, "2 * 4 = ?", ["6", "7", "9", "8"], "D"),
            item(s, "9 - 4 = ?", ["5", "4", "3", "6"], "A"),
        ],
        excluded: BTreeMap::new(),
        source_counts: BTreeMap::new(),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let task = match std::env::args().nth(1) {
        Some(dir) => load_task(EvalFormat::Mmlu, Path::new(&dir), None)?,
        None => demo_task(),
    };
    let first = &task.test_items[0];
    println!("{}\n", build_fewshot_prompt(&task, &first.subject, first));

    // always picks the first label
    let backend = FnBackend::new("always-a", |_: &CompletionRequest| Ok(" A".to_string()));
    let report = evaluate(&task, &backend, 0)?;
    for (subject, t) in &report.per_subject {
        println!("{subject}: {}/{} = {:.4}", t.correct, t.total, t.accuracy);
    }
    println!("macro {:.4}, unparsed {}", report.macro_accuracy, report.unparsed_count);
    Ok(())
}
