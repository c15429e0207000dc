//! Loaders for the supported on-disk layouts.
//!
//! * `mmlu`: `dev/{subject}_dev.csv` and `test/{subject}_test.csv`, no
//!   header; columns question, A, B, C, D, answer.
//! * `ceval`: `dev/{subject}_dev.csv` and `val/{subject}_val.csv` with a
//!   header row `id,question,A,B,C,D,answer[,explanation]`.
//! * `pubmedqa`: `ori_pqal.json` (or `test.json`), an object keyed by PMID
//!   with `QUESTION`, `CONTEXTS` and `final_decision`; optional `dev.json`
//!   in the same shape.
//! * `scieval`: `scieval-valid.json` / `scieval-dev.json` (or `valid.json`
//!   / `dev.json`), arrays of objects with `question`, `answer`, `type` and
//!   `category`.
//! * `csqa`: benchmark items as JSON lines; one subject per question type.
//!
//! Formats without a dev split reserve the first `n_shots` items of each
//! subject as exemplars and leave them out of scoring.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use super::{EvalError, EvalFormat, EvalTask, QAItem};
use crate::bench::parse_items;

pub const PUBMEDQA_SUBJECT: &str = "biomedical research";

fn abcd() -> Vec<String> {
    ["A", "B", "C", "D"].iter().map(|s| s.to_string()).collect()
}

fn malformed(file: &Path, row: usize, message: impl Into<String>) -> EvalError {
    EvalError::Malformed {
        file: file.display().to_string(),
        row,
        message: message.into(),
    }
}

fn io_err(file: &Path, e: std::io::Error) -> EvalError {
    EvalError::Io {
        path: file.display().to_string(),
        source: e,
    }
}

/// `(subject, path)` for every `{subject}{suffix}` file in `dir`, sorted.
fn subject_files(dir: &Path, suffix: &str) -> Result<Vec<(String, PathBuf)>, EvalError> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
        let path = entry.map_err(|e| io_err(dir, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if let Some(subject) = name.strip_suffix(suffix) {
            out.push((subject.to_string(), path.clone()));
        }
    }
    out.sort();
    Ok(out)
}

fn read_csv_items(path: &Path, subject: &str, has_header: bool) -> Result<Vec<QAItem>, EvalError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .from_path(path)
        .map_err(|e| malformed(path, 0, e.to_string()))?;
    let offset = usize::from(has_header);
    let labels = abcd();
    let mut items = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1 + offset;
        let row = row.map_err(|e| malformed(path, row_no, e.to_string()))?;
        // ceval rows carry a leading id column
        let fields: Vec<&str> = row.iter().skip(offset).collect();
        if fields.len() < 6 {
            return Err(malformed(path, row_no, format!("expected 6 columns, found {}", fields.len())));
        }
        let gold = fields[5].trim().to_uppercase();
        if !labels.contains(&gold) {
            return Err(malformed(path, row_no, format!("answer {:?} is not one of A-D", fields[5])));
        }
        items.push(QAItem {
            subject: subject.to_string(),
            question: fields[0].to_string(),
            options: Some(fields[1..5].iter().map(|s| s.to_string()).collect()),
            context: None,
            gold,
        });
    }
    Ok(items)
}

fn group(items: Vec<QAItem>) -> BTreeMap<String, Vec<QAItem>> {
    let mut out: BTreeMap<String, Vec<QAItem>> = BTreeMap::new();
    for item in items {
        out.entry(item.subject.clone()).or_default().push(item);
    }
    out
}

fn csv_layout(
    root: &Path,
    dev: (&str, &str),
    test: (&str, &str),
    has_header: bool,
) -> Result<(BTreeMap<String, Vec<QAItem>>, Vec<QAItem>), EvalError> {
    let mut dev_pool = BTreeMap::new();
    for (subject, path) in subject_files(&root.join(dev.0), dev.1)? {
        dev_pool.insert(subject.clone(), read_csv_items(&path, &subject, has_header)?);
    }
    let mut tests = Vec::new();
    for (subject, path) in subject_files(&root.join(test.0), test.1)? {
        tests.extend(read_csv_items(&path, &subject, has_header)?);
    }
    Ok((dev_pool, tests))
}

fn read_json(path: &Path) -> Result<Option<Value>, EvalError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    if text.trim().is_empty() {
        return Ok(None);
    }
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| malformed(path, e.line(), e.to_string()))
}

fn first_existing(root: &Path, names: &[&str]) -> Option<PathBuf> {
    if root.is_file() {
        return Some(root.to_path_buf());
    }
    names.iter().map(|n| root.join(n)).find(|p| p.is_file())
}

fn pubmedqa_items(path: &Path) -> Result<Vec<QAItem>, EvalError> {
    let Some(value) = read_json(path)? else {
        return Ok(Vec::new());
    };
    let Value::Object(map) = value else {
        return Err(malformed(path, 1, "expected an object keyed by PMID"));
    };
    let mut items = Vec::new();
    for (row, (pmid, entry)) in map.iter().enumerate() {
        let locate = |msg: &str| malformed(path, row + 1, format!("PMID {pmid}: {msg}"));
        let question = entry.get("QUESTION").and_then(Value::as_str).ok_or_else(|| locate("missing QUESTION"))?;
        let contexts = entry
            .get("CONTEXTS")
            .and_then(Value::as_array)
            .ok_or_else(|| locate("missing CONTEXTS"))?;
        let context: Vec<&str> = contexts.iter().filter_map(Value::as_str).collect();
        let gold = entry
            .get("final_decision")
            .and_then(Value::as_str)
            .ok_or_else(|| locate("missing final_decision"))?
            .trim()
            .to_lowercase();
        if !["yes", "no", "maybe"].contains(&gold.as_str()) {
            return Err(locate(&format!("final_decision {gold:?} is not yes/no/maybe")));
        }
        items.push(QAItem {
            subject: PUBMEDQA_SUBJECT.to_string(),
            question: question.to_string(),
            options: None,
            context: Some(context.join(" ")),
            gold,
        });
    }
    Ok(items)
}

/// Splits trailing `A. ...` to `D. ...` lines off a question.
fn split_inline_options(text: &str) -> (String, Option<Vec<String>>) {
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() < 5 {
        return (text.to_string(), None);
    }
    let tail = &lines[lines.len() - 4..];
    let mut options = Vec::new();
    for (line, label) in tail.iter().zip(['A', 'B', 'C', 'D']) {
        let line = line.trim_start();
        let mut chars = line.chars();
        if chars.next() != Some(label) {
            return (text.to_string(), None);
        }
        let rest = chars.as_str();
        let Some(body) = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')')).or_else(|| rest.strip_prefix(':')) else {
            return (text.to_string(), None);
        };
        options.push(body.trim().to_string());
    }
    (lines[..lines.len() - 4].join("\n"), Some(options))
}

fn answer_label(value: Option<&Value>) -> Option<String> {
    match value? {
        Value::String(s) => Some(s.trim().to_uppercase()),
        Value::Array(a) => a.first().and_then(Value::as_str).map(|s| s.trim().to_uppercase()),
        _ => None,
    }
}

struct SciEvalRows {
    items: Vec<QAItem>,
    counts: BTreeMap<String, usize>,
    excluded: BTreeMap<String, usize>,
}

/// Objective rows of a SciEval split. Multiple-choice rows become items;
/// judge and filling rows are counted per subject but not scored.
fn scieval_rows(path: &Path) -> Result<SciEvalRows, EvalError> {
    let mut rows = SciEvalRows {
        items: Vec::new(),
        counts: BTreeMap::new(),
        excluded: BTreeMap::new(),
    };
    let Some(value) = read_json(path)? else {
        return Ok(rows);
    };
    let Value::Array(entries) = value else {
        return Err(malformed(path, 1, "expected an array of questions"));
    };
    for (i, entry) in entries.iter().enumerate() {
        let locate = |msg: &str| malformed(path, i + 1, msg.to_string());
        let subject = ["category", "subject", "domain"]
            .iter()
            .find_map(|k| entry.get(*k).and_then(Value::as_str))
            .ok_or_else(|| locate("missing category"))?
            .trim()
            .to_lowercase();
        let kind = entry.get("type").and_then(Value::as_str).unwrap_or("multiple-choice");
        if !matches!(kind, "multiple-choice" | "judge" | "filling") {
            continue;
        }
        *rows.counts.entry(subject.clone()).or_default() += 1;
        if kind != "multiple-choice" {
            *rows.excluded.entry(subject).or_default() += 1;
            continue;
        }
        let question = entry.get("question").and_then(Value::as_str).ok_or_else(|| locate("missing question"))?;
        let gold = answer_label(entry.get("answer")).ok_or_else(|| locate("missing answer"))?;
        if !abcd().contains(&gold) {
            return Err(locate(&format!("answer {gold:?} is not one of A-D")));
        }
        let (question, options) = split_inline_options(question);
        rows.items.push(QAItem {
            subject,
            question,
            options,
            context: None,
            gold,
        });
    }
    Ok(rows)
}

fn reserve_exemplars(items: Vec<QAItem>, k: usize) -> (BTreeMap<String, Vec<QAItem>>, Vec<QAItem>, BTreeMap<String, usize>) {
    let mut dev_pool: BTreeMap<String, Vec<QAItem>> = BTreeMap::new();
    let mut tests = Vec::new();
    let mut reserved: BTreeMap<String, usize> = BTreeMap::new();
    for item in items {
        let pool = dev_pool.entry(item.subject.clone()).or_default();
        if pool.len() < k {
            *reserved.entry(item.subject.clone()).or_default() += 1;
            pool.push(item);
        } else {
            tests.push(item);
        }
    }
    (dev_pool, tests, reserved)
}

/// Load `format` from `path`. `n_shots` defaults to the format's standard
/// shot count.
pub fn load_task(format: EvalFormat, path: &Path, n_shots: Option<usize>) -> Result<EvalTask, EvalError> {
    let n_shots = n_shots.unwrap_or(format.default_shots());
    let mut excluded = BTreeMap::new();
    let mut source_counts = None;
    let (dev_pool, test_items, labels) = match format {
        EvalFormat::Mmlu => {
            let (dev, test) = csv_layout(path, ("dev", "_dev.csv"), ("test", "_test.csv"), false)?;
            (dev, test, abcd())
        }
        EvalFormat::Ceval => {
            let (dev, test) = csv_layout(path, ("dev", "_dev.csv"), ("val", "_val.csv"), true)?;
            (dev, test, abcd())
        }
        EvalFormat::Pubmedqa => {
            let test_file = first_existing(path, &["ori_pqal.json", "test.json"])
                .ok_or_else(|| EvalError::Config(format!("no ori_pqal.json or test.json under {}", path.display())))?;
            let items = pubmedqa_items(&test_file)?;
            let labels = vec!["yes".to_string(), "no".to_string(), "maybe".to_string()];
            let dev_file = path.join("dev.json");
            if path.is_dir() && dev_file.is_file() {
                (group(pubmedqa_items(&dev_file)?), items, labels)
            } else {
                let (dev, test, reserved) = reserve_exemplars(items, n_shots);
                excluded = reserved;
                (dev, test, labels)
            }
        }
        EvalFormat::Scieval => {
            let test_file = first_existing(path, &["scieval-valid.json", "valid.json"])
                .ok_or_else(|| EvalError::Config(format!("no scieval-valid.json under {}", path.display())))?;
            let rows = scieval_rows(&test_file)?;
            excluded = rows.excluded;
            source_counts = Some(rows.counts);
            let dev = ["scieval-dev.json", "dev.json"]
                .iter()
                .map(|n| path.join(n))
                .find(|p| path.is_dir() && p.is_file());
            match dev {
                Some(dev) => (group(scieval_rows(&dev)?.items), rows.items, abcd()),
                None => {
                    let (dev, test, reserved) = reserve_exemplars(rows.items, n_shots);
                    for (s, n) in reserved {
                        *excluded.entry(s).or_default() += n;
                    }
                    (dev, test, abcd())
                }
            }
        }
        EvalFormat::Csqa => {
            let file = if path.is_dir() { path.join("bench.jsonl") } else { path.to_path_buf() };
            let reader = std::io::BufReader::new(fs::File::open(&file).map_err(|e| io_err(&file, e))?);
            let bench = parse_items(reader).map_err(|e| match e {
                crate::bench::BenchError::Parse { line, message } => malformed(&file, line, message),
                crate::bench::BenchError::Io(e) => io_err(&file, e),
            })?;
            let labels = abcd();
            let items = bench
                .into_iter()
                .map(|b| QAItem {
                    subject: b.qtype.as_str().replace('-', "_"),
                    question: b.question,
                    gold: labels[b.answer_index].clone(),
                    options: Some(b.options),
                    context: None,
                })
                .collect();
            let (dev, test, reserved) = reserve_exemplars(items, n_shots);
            excluded = reserved;
            (dev, test, labels)
        }
    };

    let mut subjects: Vec<String> = test_items.iter().map(|i| i.subject.clone()).collect();
    subjects.sort();
    subjects.dedup();
    let source_counts = source_counts.unwrap_or_else(|| {
        let mut counts = BTreeMap::new();
        for item in &test_items {
            *counts.entry(item.subject.clone()).or_default() += 1;
        }
        counts
    });
    let task = EvalTask {
        name: format.as_str().to_string(),
        n_shots,
        choice_labels: labels,
        subjects,
        dev_pool,
        test_items,
        excluded,
        source_counts,
    };
    task.validate()?;
    Ok(task)
}
