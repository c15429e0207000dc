//! Multiple-choice benchmark construction from PapersWithCode-style dumps.
//!
//! Every method and dataset yields an *intro* item (pick the description
//! of X, with X's own name masked out of it) and a *refer* item (pick the
//! paper that introduced X). Distractors come from records in the same
//! collection, falling back to the same area and then to the whole dump.

mod text;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use text::{mask_description, strip_links, MASK};

const OPTIONS: usize = 4;
const DISTRACTORS: usize = OPTIONS - 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodRecord {
    pub name: String,
    #[serde(default)]
    pub full_name: Option<String>,
    pub description: String,
    #[serde(default)]
    pub introducing_paper_title: String,
    /// `area/category/collection`.
    #[serde(default)]
    pub collection_path: String,
    #[serde(default)]
    pub area: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub name: String,
    #[serde(default)]
    pub full_name: Option<String>,
    pub description: String,
    #[serde(default)]
    pub introducing_paper_title: String,
    #[serde(default)]
    pub modality: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QType {
    MethodIntro,
    MethodRefer,
    DatasetIntro,
    DatasetRefer,
}

impl QType {
    pub const ALL: [QType; 4] = [QType::MethodIntro, QType::MethodRefer, QType::DatasetIntro, QType::DatasetRefer];

    pub fn as_str(self) -> &'static str {
        match self {
            QType::MethodIntro => "method-intro",
            QType::MethodRefer => "method-refer",
            QType::DatasetIntro => "dataset-intro",
            QType::DatasetRefer => "dataset-refer",
        }
    }

    pub fn is_intro(self) -> bool {
        matches!(self, QType::MethodIntro | QType::DatasetIntro)
    }

    fn is_method(self) -> bool {
        matches!(self, QType::MethodIntro | QType::MethodRefer)
    }

    fn code(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for QType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub distractors: Vec<String>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkItem {
    pub id: String,
    pub qtype: QType,
    pub question: String,
    pub options: Vec<String>,
    pub answer_index: usize,
    pub provenance: Provenance,
}

impl BenchmarkItem {
    pub fn gold(&self) -> &str {
        &self.options[self.answer_index]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{reason}")]
pub struct SkipReason {
    pub reason: String,
}

impl SkipReason {
    fn new(reason: impl Into<String>) -> Self {
        SkipReason { reason: reason.into() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A method or dataset as the item builder sees it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceRecord {
    pub id: String,
    pub name: String,
    pub full_name: Option<String>,
    pub description: String,
    pub paper_title: String,
    pub collection: String,
    pub area: String,
}

impl SourceRecord {
    fn display_name(&self) -> &str {
        self.full_name.as_deref().map(str::trim).filter(|f| !f.is_empty()).unwrap_or(&self.name)
    }

    /// Description with links removed and the record's own names masked.
    pub fn clean_description(&self) -> String {
        mask_description(&strip_links(&self.description), &self.name, self.full_name.as_deref())
            .trim()
            .to_string()
    }
}

impl From<&MethodRecord> for SourceRecord {
    fn from(m: &MethodRecord) -> Self {
        let area = if m.area.is_empty() {
            m.collection_path.split('/').next().unwrap_or_default().to_string()
        } else {
            m.area.clone()
        };
        SourceRecord {
            id: m.name.clone(),
            name: m.name.clone(),
            full_name: m.full_name.clone(),
            description: m.description.clone(),
            paper_title: m.introducing_paper_title.trim().to_string(),
            collection: m.collection_path.clone(),
            area,
        }
    }
}

impl From<&DatasetRecord> for SourceRecord {
    fn from(d: &DatasetRecord) -> Self {
        SourceRecord {
            id: d.name.clone(),
            name: d.name.clone(),
            full_name: d.full_name.clone(),
            description: d.description.clone(),
            paper_title: d.introducing_paper_title.trim().to_string(),
            collection: d.modality.clone(),
            area: d.modality.clone(),
        }
    }
}

/// Records of one kind, grouped for distractor sampling.
#[derive(Debug, Clone)]
pub struct CandidatePool {
    records: Vec<SourceRecord>,
    by_collection: HashMap<String, Vec<usize>>,
    by_area: HashMap<String, Vec<usize>>,
}

impl CandidatePool {
    pub fn new(records: Vec<SourceRecord>) -> Self {
        let mut by_collection: HashMap<String, Vec<usize>> = HashMap::new();
        let mut by_area: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, r) in records.iter().enumerate() {
            if !r.collection.is_empty() {
                by_collection.entry(r.collection.clone()).or_default().push(i);
            }
            if !r.area.is_empty() {
                by_area.entry(r.area.clone()).or_default().push(i);
            }
        }
        CandidatePool {
            records,
            by_collection,
            by_area,
        }
    }

    pub fn records(&self) -> &[SourceRecord] {
        &self.records
    }

    /// Up to `DISTRACTORS` option texts for record `target`, tier by tier.
    fn sample(
        &self,
        target: usize,
        rng: &mut ChaCha8Rng,
        gold: &str,
        option_of: impl Fn(&SourceRecord) -> String,
    ) -> (Vec<String>, Vec<String>) {
        let record = &self.records[target];
        let tiers: [Option<&[usize]>; 3] = [
            Some(self.by_collection.get(&record.collection).map_or(&[], Vec::as_slice)),
            Some(self.by_area.get(&record.area).map_or(&[], Vec::as_slice)),
            None,
        ];
        let mut visited = HashSet::from([target]);
        let mut seen_text = HashSet::from([normalize(gold)]);
        let (mut texts, mut ids) = (Vec::new(), Vec::new());
        for tier in tiers {
            if texts.len() == DISTRACTORS {
                break;
            }
            let mut candidates: Vec<usize> = match tier {
                Some(tier) => tier.iter().copied().filter(|i| !visited.contains(i)).collect(),
                None => (0..self.records.len()).filter(|i| !visited.contains(i)).collect(),
            };
            // Uniform draws without replacement, stopping once enough are found.
            while !candidates.is_empty() && texts.len() < DISTRACTORS {
                let i = candidates.swap_remove(rng.gen_range(0..candidates.len()));
                visited.insert(i);
                let text = option_of(&self.records[i]);
                if text.is_empty() || !seen_text.insert(normalize(&text)) {
                    continue;
                }
                texts.push(text);
                ids.push(self.records[i].id.clone());
            }
        }
        (texts, ids)
    }
}

fn normalize(text: &str) -> String {
    text.trim().to_lowercase()
}

fn item_rng(seed: u64, qtype: QType, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((index as u64) << 2) | qtype.code());
    rng
}

fn question_for(qtype: QType, record: &SourceRecord) -> String {
    let name = record.display_name();
    match qtype {
        QType::MethodIntro => format!("Which of the following options is a description of \"{name}\"?"),
        QType::DatasetIntro => format!("{} is a dataset which:", record.name.trim()),
        QType::MethodRefer => format!("which of the following paper proposed the method {name}?"),
        QType::DatasetRefer => format!("which of the following paper introduced the dataset {name}?"),
    }
}

/// Build one item for `pool.records()[index]` with the per-item random stream.
pub fn make_item(qtype: QType, index: usize, pool: &CandidatePool, seed: u64) -> Result<BenchmarkItem, SkipReason> {
    let mut rng = item_rng(seed, qtype, index);
    make_item_with(qtype, index, pool, seed, &mut rng)
}

pub fn make_item_with(
    qtype: QType,
    index: usize,
    pool: &CandidatePool,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<BenchmarkItem, SkipReason> {
    let record = pool
        .records
        .get(index)
        .ok_or_else(|| SkipReason::new(format!("no record at index {index}")))?;
    if record.name.trim().is_empty() {
        return Err(SkipReason::new("invalid-record: empty name"));
    }
    let (gold, option_of): (String, fn(&SourceRecord) -> String) = if qtype.is_intro() {
        if record.description.trim().is_empty() {
            return Err(SkipReason::new("invalid-record: empty description"));
        }
        let gold = record.clean_description();
        if gold.is_empty() || gold.chars().all(|c| c == '(' || c == ')' || c.is_whitespace()) {
            return Err(SkipReason::new("empty-description: nothing left after masking"));
        }
        let lower = gold.to_lowercase();
        let names = std::iter::once(record.name.as_str()).chain(record.full_name.as_deref());
        if let Some(leak) = names
            .map(str::trim)
            .filter(|n| !n.is_empty())
            .find(|n| lower.contains(&n.to_lowercase()))
        {
            return Err(SkipReason::new(format!(
                "residual-leak: {leak:?} survives masking inside a longer word"
            )));
        }
        (gold, |r: &SourceRecord| r.clean_description())
    } else {
        if record.paper_title.is_empty() {
            return Err(SkipReason::new("no-introducing-paper"));
        }
        (record.paper_title.clone(), |r: &SourceRecord| r.paper_title.clone())
    };

    let (distractors, ids) = pool.sample(index, rng, &gold, option_of);
    if distractors.len() < DISTRACTORS {
        return Err(SkipReason::new(format!(
            "pool-exhausted: only {} distinct distractors available",
            distractors.len()
        )));
    }
    let mut options = distractors;
    options.push(gold);
    let mut order: Vec<usize> = (0..OPTIONS).collect();
    order.shuffle(rng);
    let options: Vec<String> = order.iter().map(|&i| options[i].clone()).collect();
    let answer_index = order.iter().position(|&i| i == DISTRACTORS).expect("gold is placed");

    Ok(BenchmarkItem {
        id: format!("{}-{index:05}", qtype.as_str()),
        qtype,
        question: question_for(qtype, record),
        options,
        answer_index,
        provenance: Provenance {
            source: record.id.clone(),
            distractors: ids,
            seed,
        },
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ItemMode {
    /// Both intro and refer for every record.
    #[default]
    Both,
    /// Alternate intro (even record index) and refer (odd).
    OnePerRecord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRecord {
    pub qtype: QType,
    pub record: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildStats {
    pub counts: BTreeMap<QType, usize>,
    pub skipped: Vec<SkippedRecord>,
}

impl BuildStats {
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }
}

/// Items for every eligible record, methods first, in record order.
pub fn build_dataset(
    methods: &[MethodRecord],
    datasets: &[DatasetRecord],
    seed: u64,
    mode: ItemMode,
) -> (Vec<BenchmarkItem>, BuildStats) {
    let method_pool = CandidatePool::new(methods.iter().map(SourceRecord::from).collect());
    let dataset_pool = CandidatePool::new(datasets.iter().map(SourceRecord::from).collect());
    let mut items = Vec::new();
    let mut stats = BuildStats::default();
    for (pool, kinds) in [
        (&method_pool, [QType::MethodIntro, QType::MethodRefer]),
        (&dataset_pool, [QType::DatasetIntro, QType::DatasetRefer]),
    ] {
        for index in 0..pool.records.len() {
            let wanted: &[QType] = match mode {
                ItemMode::Both => &kinds,
                ItemMode::OnePerRecord => std::slice::from_ref(&kinds[index % 2]),
            };
            for &qtype in wanted {
                debug_assert_eq!(qtype.is_method(), std::ptr::eq(pool, &method_pool));
                match make_item(qtype, index, pool, seed) {
                    Ok(item) => {
                        *stats.counts.entry(qtype).or_default() += 1;
                        items.push(item);
                    }
                    Err(skip) => stats.skipped.push(SkippedRecord {
                        qtype,
                        record: pool.records[index].id.clone(),
                        reason: skip.reason,
                    }),
                }
            }
        }
    }
    (items, stats)
}

fn parse_jsonl<T: serde::de::DeserializeOwned>(reader: impl BufRead) -> Result<Vec<T>, BenchError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| BenchError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn parse_methods(reader: impl BufRead) -> Result<Vec<MethodRecord>, BenchError> {
    parse_jsonl(reader)
}

pub fn parse_datasets(reader: impl BufRead) -> Result<Vec<DatasetRecord>, BenchError> {
    parse_jsonl(reader)
}

pub fn parse_items(reader: impl BufRead) -> Result<Vec<BenchmarkItem>, BenchError> {
    parse_jsonl(reader)
}

pub fn write_items(items: &[BenchmarkItem], mut out: impl Write) -> std::io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Violations of the item invariants, empty when the item is sound.
pub fn check_item(item: &BenchmarkItem, source: &SourceRecord) -> Vec<String> {
    let mut problems = Vec::new();
    if item.options.len() != OPTIONS {
        problems.push(format!("{} options", item.options.len()));
        return problems;
    }
    if item.answer_index >= OPTIONS {
        problems.push("answer_index out of range".into());
        return problems;
    }
    let distinct: HashSet<String> = item.options.iter().map(|o| normalize(o)).collect();
    if distinct.len() != OPTIONS {
        problems.push("options not pairwise distinct".into());
    }
    let gold = normalize(item.gold());
    if item.options.iter().filter(|o| normalize(o) == gold).count() != 1 {
        problems.push("gold option not unique".into());
    }
    if item.options.iter().any(|o| o.to_lowercase().contains("http://") || o.to_lowercase().contains("https://")) {
        problems.push("URL survived".into());
    }
    if item.qtype.is_intro() {
        for name in std::iter::once(source.name.as_str()).chain(source.full_name.as_deref()) {
            let name = name.trim().to_lowercase();
            if !name.is_empty() && gold.contains(&name) {
                problems.push(format!("gold leaks {name:?}"));
            }
        }
    }
    problems
}
