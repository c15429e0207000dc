use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const DATE_FORMAT: &str = "%Y/%m/%d";

pub fn parse_date(text: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(text.trim(), DATE_FORMAT).ok()
}

pub fn format_date(date: NaiveDate) -> String {
    date.format(DATE_FORMAT).to_string()
}

mod slash_date {
    use chrono::NaiveDate;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(date: &NaiveDate, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_date(*date))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveDate, D::Error> {
        let text = String::deserialize(d)?;
        super::parse_date(&text).ok_or_else(|| serde::de::Error::custom(format!("bad date {text:?}, expected yyyy/MM/dd")))
    }
}

/// One paper in the knowledge graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PaperRecord {
    pub id: String,
    pub title: String,
    #[serde(default, alias = "abstracts")]
    pub r#abstract: String,
    #[serde(default)]
    pub authors: Vec<String>,
    #[serde(default)]
    pub field_of_study: String,
    #[serde(with = "slash_date")]
    pub publish_date: NaiveDate,
    #[serde(default)]
    pub venue: String,
    #[serde(default)]
    pub citation_count: u64,
    #[serde(default)]
    pub references: Vec<String>,
    #[serde(default)]
    pub keywords: Vec<String>,
}

/// Searchable text fields, named as the agent's tool schema names them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TextField {
    Abstracts,
    Authors,
    FieldOfStudy,
    Title,
    Venue,
}

impl TextField {
    pub const ALL: [TextField; 5] = [
        TextField::Abstracts,
        TextField::Authors,
        TextField::FieldOfStudy,
        TextField::Title,
        TextField::Venue,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TextField::Abstracts => "abstracts",
            TextField::Authors => "authors",
            TextField::FieldOfStudy => "fieldOfStudy",
            TextField::Title => "title",
            TextField::Venue => "venue",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        TextField::ALL.into_iter().find(|f| f.name() == name)
    }

    pub(crate) fn slot(self) -> usize {
        self as usize
    }
}

/// Fields that may appear in `resultParameters` or `sort_by`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ResultField {
    Text(TextField),
    PublishDate,
    CitationCount,
}

impl ResultField {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "publishDate" => Some(ResultField::PublishDate),
            "citationCount" => Some(ResultField::CitationCount),
            other => TextField::parse(other).map(ResultField::Text),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ResultField::Text(f) => f.name(),
            ResultField::PublishDate => "publishDate",
            ResultField::CitationCount => "citationCount",
        }
    }
}

impl PaperRecord {
    pub fn text(&self, field: TextField) -> String {
        match field {
            TextField::Abstracts => self.r#abstract.clone(),
            TextField::Authors => self.authors.join(", "),
            TextField::FieldOfStudy => self.field_of_study.clone(),
            TextField::Title => self.title.clone(),
            TextField::Venue => self.venue.clone(),
        }
    }

    pub fn field_value(&self, field: ResultField) -> Value {
        match field {
            ResultField::Text(TextField::Authors) => Value::from(self.authors.clone()),
            ResultField::Text(f) => Value::from(self.text(f)),
            ResultField::PublishDate => Value::from(format_date(self.publish_date)),
            ResultField::CitationCount => Value::from(self.citation_count),
        }
    }

    /// JSON object holding exactly `fields`.
    pub fn project(&self, fields: &[ResultField]) -> Map<String, Value> {
        fields
            .iter()
            .map(|f| (f.name().to_string(), self.field_value(*f)))
            .collect()
    }
}

/// Check one JSON Lines row and turn it into a record.
pub(crate) fn record_from_value(value: Value) -> Result<PaperRecord, String> {
    let obj = value.as_object().ok_or("not a JSON object")?;
    for required in ["id", "title", "publishDate"] {
        match obj.get(required) {
            None | Some(Value::Null) => return Err(format!("missing-field: {required}")),
            _ => {}
        }
    }
    if let Some(count) = obj.get("citationCount") {
        if count.as_i64().is_some_and(|c| c < 0) {
            return Err("invalid-field: citationCount is negative".into());
        }
    }
    let record: PaperRecord = serde_json::from_value(value).map_err(|e| format!("invalid-field: {e}"))?;
    if record.id.trim().is_empty() {
        return Err("invalid-field: id is empty".into());
    }
    if record.references.iter().any(|r| r == &record.id) {
        return Err("self-reference: record cites itself".into());
    }
    Ok(record)
}
