//! Ingest paper records, run field queries and find similar papers.

use std::io::Cursor;

use serde_json::json;
use workbench_core::kg::{KgIndex, KgQuery};

const PAPERS: &str = include_str!("../tests/fixtures/papers.jsonl");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (index, stats) = KgIndex::ingest(Cursor::new(PAPERS))?;
    println!("{} records accepted, {} rejected", stats.accepted, stats.rejected);

    let queries = [
        json!({"title": "Attention Is All You Need", "resultParameters": ["title", "authors", "publishDate"], "limit": 1}),
        json!({"abstracts": "language representation pre-training", "resultParameters": ["title", "citationCount"], "limit": 3}),
        json!({"publishDate": {"gte": "2018/01/01"}, "sort_by": {"citationCount": "desc"}, "resultParameters": ["title", "publishDate", "citationCount"], "limit": 3}),
    ];
    for q in &queries {
        println!("\n{q}");
        for hit in index.search(&KgQuery::from_json(q)?)? {
            println!("  {:.3} {}", hit.score, serde_json::Value::Object(hit.record));
        }
    }

    println!("\nsimilar to p-attention:");
    for (id, score) in index.recommend_similar("p-attention", 3)? {
        println!("  {score:.4} {id}");
    }
    Ok(())
}
