//! Academic knowledge graph: the agent's long-term memory.
//!
//! Records are ingested from JSON Lines, indexed per field with BM25
//! (k1 = 1.2, b = 0.75), and queried with the same JSON shape the
//! `AcademicSearch` tool accepts. Similar papers are ranked by
//! `0.7 * Jaccard(references) + 0.3 * Jaccard(keywords)`.

mod index;
mod query;
mod record;

pub use index::{jaccard, tokenize, Bm25Params, IndexStats, KgHit, KgIndex, Rejection, SharedIndex, SimilarityWeights};
pub use query::{DateRange, KgQuery, SortDirection, DEFAULT_LIMIT};
pub use record::{format_date, parse_date, PaperRecord, ResultField, TextField, DATE_FORMAT};

#[derive(Debug, thiserror::Error)]
pub enum KgError {
    #[error("resultParameters is required and must name at least one field")]
    MissingResultParameters,
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("paper not found: {0}")]
    NotFound(String),
    #[error("index file: {0}")]
    Persist(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
