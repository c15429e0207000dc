use serde_json::{Map, Value};

use super::{ParamSpec, ToolHandler, ToolSpec};
use crate::kg::{KgError, KgHit, KgQuery, SharedIndex};

pub const NO_MATCHES: &str = "No matching papers found.";

/// Schema of the AcademicSearch tool as shown to the model.
pub fn academic_search_spec() -> ToolSpec {
    ToolSpec {
        name: "AcademicSearch".into(),
        description: "This is an tool for retrieving academic knowledge base through fuzzy matching on abstracts, authors, title, fieldOfStudy, publishDate or venue.".into(),
        input_parameters: vec![
            ParamSpec::new("abstracts", "str", "The query of the abstract. ", false),
            ParamSpec::new("authors", "list(str)", "The authors of paper.", false),
            ParamSpec::new("fieldOfStudy", "str", "The field of the paper. ", false),
            ParamSpec::new(
                "publishDate",
                "json",
                "The key is gte or lte, and value is date(yyyy/MM/dd), such as {'gte': '2020/01/01', 'lte': '2023/12/31'}.",
                false,
            ),
            ParamSpec::new(
                "title",
                "str",
                "The title of paper. If there are multiple papers, use ';' to distinguish them, such as title1;title2.",
                false,
            ),
            ParamSpec::new("venue", "str", "Published journals or conferences.", false),
            ParamSpec::new(
                "sort_by",
                "json",
                "The Key is abstracts, authors, fieldOfStudy, publishDate, title or venue. The value is 'desc' (descending) or 'asc' (ascending).",
                false,
            ),
            ParamSpec::new(
                "resultParameters",
                "list(str)",
                "Must required. Each item in the list should be abstracts, authors, fieldOfStudy, publishDate, title, venue or citationCount(the number of citations of the paper). Format should be like ['xxx', 'xxx']",
                true,
            ),
        ],
        input_example: "{'title': 'xxx', 'resultParameters': ['authors', 'publishDate', 'abstracts']}".into(),
    }
}

/// Numbered plain-text listing of the projected fields of each hit.
pub fn render_hits(hits: &[KgHit]) -> String {
    if hits.is_empty() {
        return NO_MATCHES.to_string();
    }
    let mut out = String::new();
    for (i, hit) in hits.iter().enumerate() {
        for (j, (key, value)) in hit.record.iter().enumerate() {
            let text = match value {
                Value::String(s) => s.clone(),
                Value::Array(items) => items
                    .iter()
                    .map(|v| v.as_str().map(str::to_string).unwrap_or_else(|| v.to_string()))
                    .collect::<Vec<_>>()
                    .join(", "),
                other => other.to_string(),
            };
            if j == 0 {
                out.push_str(&format!("{}. {key}: {text}\n", i + 1));
            } else {
                out.push_str(&format!("   {key}: {text}\n"));
            }
        }
    }
    out.trim_end().to_string()
}

/// Search over the knowledge graph.
#[derive(Debug, Clone)]
pub struct AcademicSearch {
    index: SharedIndex,
}

impl AcademicSearch {
    pub fn new(index: SharedIndex) -> Self {
        AcademicSearch { index }
    }
}

impl ToolHandler for AcademicSearch {
    fn call(&self, input: &Map<String, Value>) -> Result<String, String> {
        let query = KgQuery::from_map(input).map_err(|e| match e {
            KgError::MissingResultParameters => "Missing required parameter \"resultParameters\": it must list at least one of abstracts, authors, fieldOfStudy, publishDate, title, venue, citationCount.".to_string(),
            other => format!("Invalid AcademicSearch input: {other}."),
        })?;
        let hits = self.index.current().search(&query).map_err(|e| e.to_string())?;
        Ok(render_hits(&hits))
    }
}
