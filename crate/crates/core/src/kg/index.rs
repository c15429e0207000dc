use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::query::{KgQuery, SortDirection};
use super::record::{record_from_value, PaperRecord, ResultField, TextField};
use super::KgError;

const INDEX_FORMAT: &str = "workbench-kg-index";
const INDEX_VERSION: u32 = 1;

/// Lowercase word tokens, split on anything that is not alphanumeric.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityWeights {
    pub references: f64,
    pub keywords: f64,
}

impl Default for SimilarityWeights {
    fn default() -> Self {
        SimilarityWeights {
            references: 0.7,
            keywords: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    /// 1-based line number in the input stream.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexStats {
    pub accepted: usize,
    pub rejected: usize,
    pub reasons: Vec<Rejection>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KgHit {
    pub record: Map<String, Value>,
    pub score: f64,
}

#[derive(Debug, Clone, Default)]
struct FieldIndex {
    postings: HashMap<String, Vec<(u32, u32)>>,
    doc_len: Vec<u32>,
    avg_len: f64,
}

impl FieldIndex {
    fn build(texts: impl Iterator<Item = String>) -> Self {
        let mut index = FieldIndex::default();
        for (doc, text) in texts.enumerate() {
            let tokens = tokenize(&text);
            index.doc_len.push(tokens.len() as u32);
            let mut tf: HashMap<String, u32> = HashMap::new();
            for t in tokens {
                *tf.entry(t).or_default() += 1;
            }
            for (term, count) in tf {
                index.postings.entry(term).or_default().push((doc as u32, count));
            }
        }
        let total: u64 = index.doc_len.iter().map(|&l| l as u64).sum();
        index.avg_len = if index.doc_len.is_empty() {
            0.0
        } else {
            total as f64 / index.doc_len.len() as f64
        };
        for list in index.postings.values_mut() {
            list.sort_unstable();
        }
        index
    }

    /// BM25 score of every document against `query`; unique query terms only.
    fn score(&self, query: &str, params: Bm25Params) -> Vec<f64> {
        let n_docs = self.doc_len.len();
        let mut scores = vec![0.0; n_docs];
        let mut seen = HashSet::new();
        for term in tokenize(query) {
            if !seen.insert(term.clone()) {
                continue;
            }
            let Some(list) = self.postings.get(&term) else { continue };
            let df = list.len() as f64;
            let idf = (1.0 + (n_docs as f64 - df + 0.5) / (df + 0.5)).ln();
            for &(doc, tf) in list {
                let tf = tf as f64;
                let len = self.doc_len[doc as usize] as f64;
                let norm = if self.avg_len > 0.0 { len / self.avg_len } else { 0.0 };
                scores[doc as usize] += idf * tf * (params.k1 + 1.0) / (tf + params.k1 * (1.0 - params.b + params.b * norm));
            }
        }
        scores
    }
}

/// Immutable fielded index over paper records.
#[derive(Debug, Clone)]
pub struct KgIndex {
    records: Vec<PaperRecord>,
    by_id: HashMap<String, usize>,
    fields: Vec<FieldIndex>,
    params: Bm25Params,
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    format: String,
    version: u32,
    bm25: Bm25Params,
    records: Vec<PaperRecord>,
}

impl KgIndex {
    /// Build from records already known to be valid. Later duplicates of an
    /// id are dropped.
    pub fn from_records(records: Vec<PaperRecord>) -> Self {
        Self::with_params(records, Bm25Params::default())
    }

    pub fn with_params(records: Vec<PaperRecord>, params: Bm25Params) -> Self {
        let mut by_id = HashMap::new();
        let mut kept = Vec::with_capacity(records.len());
        for record in records {
            if by_id.contains_key(&record.id) {
                continue;
            }
            by_id.insert(record.id.clone(), kept.len());
            kept.push(record);
        }
        let fields = TextField::ALL
            .iter()
            .map(|&f| FieldIndex::build(kept.iter().map(|r| r.text(f))))
            .collect();
        KgIndex {
            records: kept,
            by_id,
            fields,
            params,
        }
    }

    /// Read JSON Lines of [`PaperRecord`]; bad lines are counted, not fatal.
    pub fn ingest<R: BufRead>(reader: R) -> Result<(KgIndex, IndexStats), KgError> {
        let mut stats = IndexStats::default();
        let mut records = Vec::new();
        let mut ids = HashSet::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let outcome = serde_json::from_str::<Value>(&line)
                .map_err(|e| format!("malformed-json: {e}"))
                .and_then(record_from_value)
                .and_then(|r| {
                    if ids.contains(&r.id) {
                        Err(format!("duplicate-id: {}", r.id))
                    } else {
                        Ok(r)
                    }
                });
            match outcome {
                Ok(record) => {
                    ids.insert(record.id.clone());
                    records.push(record);
                    stats.accepted += 1;
                }
                Err(reason) => {
                    stats.rejected += 1;
                    stats.reasons.push(Rejection { line: i + 1, reason });
                }
            }
        }
        Ok((KgIndex::from_records(records), stats))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[PaperRecord] {
        &self.records
    }

    pub fn get(&self, id: &str) -> Option<&PaperRecord> {
        self.by_id.get(id).map(|&i| &self.records[i])
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    /// Relevance of every record against the query clauses.
    ///
    /// Fields are summed; a title clause holding `a;b` scores each title
    /// separately and keeps the best.
    fn relevance(&self, query: &KgQuery) -> Vec<f64> {
        let mut total = vec![0.0; self.records.len()];
        for (field, text) in &query.clauses {
            let index = &self.fields[field.slot()];
            let scores = if *field == TextField::Title {
                let mut best = vec![0.0f64; self.records.len()];
                for title in text.split(';').map(str::trim).filter(|t| !t.is_empty()) {
                    for (b, s) in best.iter_mut().zip(index.score(title, self.params)) {
                        *b = b.max(s);
                    }
                }
                best
            } else {
                index.score(text, self.params)
            };
            for (t, s) in total.iter_mut().zip(scores) {
                *t += s;
            }
        }
        total
    }

    pub fn search(&self, query: &KgQuery) -> Result<Vec<KgHit>, KgError> {
        query.validate()?;
        let scores = self.relevance(query);
        let mut hits: Vec<usize> = (0..self.records.len())
            .filter(|&i| query.clauses.is_empty() || scores[i] > 0.0)
            .filter(|&i| query.date_range.is_none_or(|r| r.contains(self.records[i].publish_date)))
            .collect();
        let by_id = |a: &usize, b: &usize| self.records[*a].id.cmp(&self.records[*b].id);
        match query.sort_by {
            Some((field, direction)) => hits.sort_by(|a, b| {
                let ord = compare_field(&self.records[*a], &self.records[*b], field);
                let ord = if direction == SortDirection::Desc { ord.reverse() } else { ord };
                ord.then_with(|| by_id(a, b))
            }),
            None => hits.sort_by(|a, b| scores[*b].total_cmp(&scores[*a]).then_with(|| by_id(a, b))),
        }
        Ok(hits
            .into_iter()
            .take(query.limit)
            .map(|i| KgHit {
                record: self.records[i].project(&query.result_parameters),
                score: scores[i],
            })
            .collect())
    }

    /// Papers most similar to `paper_id` by weighted Jaccard over
    /// references and keywords. The paper itself is excluded.
    pub fn recommend_similar(&self, paper_id: &str, k: usize) -> Result<Vec<(String, f64)>, KgError> {
        self.recommend_similar_weighted(paper_id, k, SimilarityWeights::default())
    }

    pub fn recommend_similar_weighted(
        &self,
        paper_id: &str,
        k: usize,
        weights: SimilarityWeights,
    ) -> Result<Vec<(String, f64)>, KgError> {
        if k == 0 {
            return Err(KgError::InvalidQuery("k must be at least 1".into()));
        }
        let target = self.get(paper_id).ok_or_else(|| KgError::NotFound(paper_id.to_string()))?;
        let refs: HashSet<&str> = target.references.iter().map(String::as_str).collect();
        let kws: HashSet<&str> = target.keywords.iter().map(String::as_str).collect();
        let mut scored: Vec<(String, f64)> = self
            .records
            .iter()
            .filter(|r| r.id != paper_id)
            .map(|r| {
                let other_refs: HashSet<&str> = r.references.iter().map(String::as_str).collect();
                let other_kws: HashSet<&str> = r.keywords.iter().map(String::as_str).collect();
                let score = weights.references * jaccard(&refs, &other_refs) + weights.keywords * jaccard(&kws, &other_kws);
                (r.id.clone(), score)
            })
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scored.truncate(k);
        Ok(scored)
    }

    pub fn save(&self, path: &Path) -> Result<(), KgError> {
        let file = IndexFile {
            format: INDEX_FORMAT.to_string(),
            version: INDEX_VERSION,
            bm25: self.params,
            records: self.records.clone(),
        };
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(&mut out, &file).map_err(|e| KgError::Persist(e.to_string()))?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, KgError> {
        let reader = std::io::BufReader::new(std::fs::File::open(path)?);
        let file: IndexFile = serde_json::from_reader(reader).map_err(|e| KgError::Persist(e.to_string()))?;
        if file.format != INDEX_FORMAT {
            return Err(KgError::Persist(format!("not a knowledge-graph index: format {:?}", file.format)));
        }
        if file.version != INDEX_VERSION {
            return Err(KgError::Persist(format!(
                "index version {} unsupported (expected {INDEX_VERSION})",
                file.version
            )));
        }
        Ok(KgIndex::with_params(file.records, file.bm25))
    }
}

/// |A ∩ B| / |A ∪ B|, with the empty union scoring 0.
pub fn jaccard(a: &HashSet<&str>, b: &HashSet<&str>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

fn compare_field(a: &PaperRecord, b: &PaperRecord, field: ResultField) -> Ordering {
    match field {
        ResultField::PublishDate => a.publish_date.cmp(&b.publish_date),
        ResultField::CitationCount => a.citation_count.cmp(&b.citation_count),
        ResultField::Text(f) => a.text(f).to_lowercase().cmp(&b.text(f).to_lowercase()),
    }
}

/// Index handle that searches see consistently while a rebuilt index is
/// swapped in.
#[derive(Debug, Clone)]
pub struct SharedIndex(Arc<RwLock<Arc<KgIndex>>>);

impl SharedIndex {
    pub fn new(index: KgIndex) -> Self {
        SharedIndex(Arc::new(RwLock::new(Arc::new(index))))
    }

    pub fn current(&self) -> Arc<KgIndex> {
        self.0.read().unwrap().clone()
    }

    pub fn replace(&self, index: KgIndex) {
        *self.0.write().unwrap() = Arc::new(index);
    }
}
