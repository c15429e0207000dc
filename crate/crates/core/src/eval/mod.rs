//! Few-shot multiple-choice evaluation: load a task, prompt every test
//! item through a [`Backend`], extract the chosen label and report
//! per-subject accuracy.

mod load;
mod prompt;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::gateway::{Backend, CompletionRequest, GatewayError};

pub use load::{load_task, PUBMEDQA_SUBJECT};
pub use prompt::{build_fewshot_prompt, exemplars_for, extract_answer, TEMPLATE_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalFormat {
    Mmlu,
    Ceval,
    Pubmedqa,
    Scieval,
    Csqa,
}

impl EvalFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalFormat::Mmlu => "mmlu",
            EvalFormat::Ceval => "ceval",
            EvalFormat::Pubmedqa => "pubmedqa",
            EvalFormat::Scieval => "scieval",
            EvalFormat::Csqa => "csqa",
        }
    }

    pub fn default_shots(self) -> usize {
        match self {
            EvalFormat::Mmlu | EvalFormat::Ceval | EvalFormat::Pubmedqa => 5,
            EvalFormat::Scieval | EvalFormat::Csqa => 3,
        }
    }
}

impl fmt::Display for EvalFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EvalFormat {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mmlu" => Ok(EvalFormat::Mmlu),
            "ceval" => Ok(EvalFormat::Ceval),
            "pubmedqa" => Ok(EvalFormat::Pubmedqa),
            "scieval" => Ok(EvalFormat::Scieval),
            "csqa" => Ok(EvalFormat::Csqa),
            other => Err(EvalError::Config(format!(
                "unknown task format {other:?} (expected mmlu, ceval, pubmedqa, scieval or csqa)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAItem {
    pub subject: String,
    pub question: String,
    /// Aligned with the task's labels; `None` for yes/no/maybe tasks.
    pub options: Option<Vec<String>>,
    pub context: Option<String>,
    pub gold: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalTask {
    pub name: String,
    pub n_shots: usize,
    pub choice_labels: Vec<String>,
    pub subjects: Vec<String>,
    pub dev_pool: BTreeMap<String, Vec<QAItem>>,
    pub test_items: Vec<QAItem>,
    /// Rows read but not scored (reserved exemplars, unsupported types).
    pub excluded: BTreeMap<String, usize>,
    /// Rows per subject in the scored split as found on disk.
    pub source_counts: BTreeMap<String, usize>,
}

impl EvalTask {
    pub fn validate(&self) -> Result<(), EvalError> {
        let mut labels = self.choice_labels.clone();
        labels.sort();
        labels.dedup();
        if labels.len() != self.choice_labels.len() || labels.is_empty() {
            return Err(EvalError::Config("choice labels must be non-empty and pairwise distinct".into()));
        }
        for item in self.test_items.iter().chain(self.dev_pool.values().flatten()) {
            if !self.choice_labels.contains(&item.gold) {
                return Err(EvalError::Config(format!("gold label {:?} is not a choice label", item.gold)));
            }
            if let Some(options) = &item.options {
                if options.len() != self.choice_labels.len() {
                    return Err(EvalError::Config(format!(
                        "item has {} options for {} labels",
                        options.len(),
                        self.choice_labels.len()
                    )));
                }
            }
        }
        for subject in &self.subjects {
            let available = self.dev_pool.get(subject).map_or(0, Vec::len);
            if available < self.n_shots {
                return Err(EvalError::Config(format!(
                    "{} shots requested but subject {subject:?} has {available} exemplars",
                    self.n_shots
                )));
            }
        }
        Ok(())
    }

    pub fn total_items(&self) -> usize {
        self.test_items.len()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{file}: row {row}: {message}")]
    Malformed { file: String, row: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("evaluation config: {0}")]
    Config(String),
    #[error("backend failed after {} scored items: {source}", partial.overall.total)]
    Backend {
        #[source]
        source: GatewayError,
        partial: Box<EvalReport>,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

impl Tally {
    fn record(&mut self, correct: bool) {
        self.total += 1;
        self.correct += usize::from(correct);
    }

    fn finish(&mut self) {
        self.accuracy = if self.total == 0 { 0.0 } else { self.correct as f64 / self.total as f64 };
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemResult {
    pub index: usize,
    pub subject: String,
    pub gold: String,
    pub predicted: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub task: String,
    pub shots: usize,
    pub backend: String,
    pub seed: u64,
    pub template: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_subject: BTreeMap<String, Tally>,
    /// Micro average over all items.
    pub overall: Tally,
    /// Unweighted mean of the per-subject accuracies.
    pub macro_accuracy: f64,
    pub unparsed_count: usize,
    pub excluded: BTreeMap<String, usize>,
    pub metadata: RunMetadata,
    pub items: Vec<ItemResult>,
}

impl EvalReport {
    fn from_results(task: &EvalTask, metadata: RunMetadata, mut items: Vec<ItemResult>) -> Self {
        items.sort_by_key(|r| r.index);
        let mut per_subject: BTreeMap<String, Tally> = BTreeMap::new();
        let mut overall = Tally::default();
        let mut unparsed_count = 0;
        for r in &items {
            let correct = r.predicted.as_deref() == Some(r.gold.as_str());
            unparsed_count += usize::from(r.predicted.is_none());
            per_subject.entry(r.subject.clone()).or_default().record(correct);
            overall.record(correct);
        }
        per_subject.values_mut().for_each(Tally::finish);
        overall.finish();
        let macro_accuracy = if per_subject.is_empty() {
            0.0
        } else {
            per_subject.values().map(|t| t.accuracy).sum::<f64>() / per_subject.len() as f64
        };
        EvalReport {
            per_subject,
            overall,
            macro_accuracy,
            unparsed_count,
            excluded: task.excluded.clone(),
            metadata,
            items,
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub seed: u64,
    pub parallelism: usize,
    pub max_tokens: u32,
    pub stop_sequences: Vec<String>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            seed: 0,
            parallelism: 1,
            max_tokens: 16,
            stop_sequences: vec!["\n\n".to_string()],
        }
    }
}

pub fn evaluate(task: &EvalTask, backend: &dyn Backend, seed: u64) -> Result<EvalReport, EvalError> {
    evaluate_with(
        task,
        backend,
        &EvalOptions {
            seed,
            ..EvalOptions::default()
        },
    )
}

/// Score every test item. With `parallelism > 1` items are spread over
/// worker threads; the report is assembled in item order either way. A
/// backend failure stops the run and returns the items scored so far.
pub fn evaluate_with(task: &EvalTask, backend: &dyn Backend, options: &EvalOptions) -> Result<EvalReport, EvalError> {
    task.validate()?;
    let metadata = RunMetadata {
        task: task.name.clone(),
        shots: task.n_shots,
        backend: backend.id(),
        seed: options.seed,
        template: TEMPLATE_VERSION.to_string(),
    };
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let results = Mutex::new(Vec::with_capacity(task.test_items.len()));
    let failure: Mutex<Option<(usize, GatewayError)>> = Mutex::new(None);

    let worker = || {
        while !stop.load(Ordering::SeqCst) {
            let index = next.fetch_add(1, Ordering::SeqCst);
            let Some(item) = task.test_items.get(index) else {
                break;
            };
            let request = CompletionRequest {
                prompt: build_fewshot_prompt(task, &item.subject, item),
                stop_sequences: options.stop_sequences.clone(),
                max_tokens: options.max_tokens,
                temperature: 0.0,
            };
            match backend.complete(&request) {
                Ok(response) => results.lock().expect("results lock").push(ItemResult {
                    index,
                    subject: item.subject.clone(),
                    gold: item.gold.clone(),
                    predicted: extract_answer(&response.text, &task.choice_labels),
                }),
                Err(e) => {
                    stop.store(true, Ordering::SeqCst);
                    let mut slot = failure.lock().expect("failure lock");
                    if slot.as_ref().is_none_or(|(i, _)| index < *i) {
                        *slot = Some((index, e));
                    }
                }
            }
        }
    };
    let threads = options.parallelism.clamp(1, task.test_items.len().max(1));
    if threads == 1 {
        worker();
    } else {
        std::thread::scope(|s| {
            for _ in 0..threads {
                s.spawn(&worker);
            }
        });
    }

    let report = EvalReport::from_results(task, metadata, results.into_inner().expect("results lock"));
    match failure.into_inner().expect("failure lock") {
        Some((_, source)) => Err(EvalError::Backend {
            source,
            partial: Box::new(report),
        }),
        None => Ok(report),
    }
}
