use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde_json::{Map, Value};

use super::record::{parse_date, ResultField, TextField};
use super::KgError;

pub const DEFAULT_LIMIT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortDirection {
    Asc,
    Desc,
}

/// Inclusive date bounds; either side may be open.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DateRange {
    pub gte: Option<NaiveDate>,
    pub lte: Option<NaiveDate>,
}

impl DateRange {
    pub fn contains(&self, date: NaiveDate) -> bool {
        self.gte.is_none_or(|lo| date >= lo) && self.lte.is_none_or(|hi| date <= hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KgQuery {
    pub clauses: BTreeMap<TextField, String>,
    pub date_range: Option<DateRange>,
    pub sort_by: Option<(ResultField, SortDirection)>,
    pub result_parameters: Vec<ResultField>,
    pub limit: usize,
}

impl KgQuery {
    pub fn new(result_parameters: Vec<ResultField>) -> Self {
        KgQuery {
            clauses: BTreeMap::new(),
            date_range: None,
            sort_by: None,
            result_parameters,
            limit: DEFAULT_LIMIT,
        }
    }

    pub fn with_clause(mut self, field: TextField, text: impl Into<String>) -> Self {
        self.clauses.insert(field, text.into());
        self
    }

    pub fn with_date_range(mut self, gte: Option<NaiveDate>, lte: Option<NaiveDate>) -> Self {
        self.date_range = Some(DateRange { gte, lte });
        self
    }

    pub fn sorted_by(mut self, field: ResultField, direction: SortDirection) -> Self {
        self.sort_by = Some((field, direction));
        self
    }

    pub fn with_limit(mut self, limit: usize) -> Self {
        self.limit = limit;
        self
    }

    pub fn validate(&self) -> Result<(), KgError> {
        if self.result_parameters.is_empty() {
            return Err(KgError::MissingResultParameters);
        }
        if self.limit == 0 {
            return Err(KgError::InvalidQuery("limit must be positive".into()));
        }
        Ok(())
    }

    /// Decode the AcademicSearch tool input.
    ///
    /// Accepts `abstracts`, `authors`, `fieldOfStudy`, `title`, `venue`,
    /// `publishDate` (`{"gte": .., "lte": ..}`), `sort_by` (`{field: "asc"|"desc"}`),
    /// `resultParameters` and `limit`. Any other key is rejected.
    pub fn from_json(value: &Value) -> Result<Self, KgError> {
        let obj = value
            .as_object()
            .ok_or_else(|| KgError::InvalidQuery("query must be a JSON object".into()))?;
        Self::from_map(obj)
    }

    pub fn from_map(obj: &Map<String, Value>) -> Result<Self, KgError> {
        let mut query = KgQuery::new(Vec::new());
        let mut saw_params = false;
        for (key, value) in obj {
            match key.as_str() {
                "resultParameters" => {
                    saw_params = true;
                    query.result_parameters = parse_result_parameters(value)?;
                }
                "publishDate" => query.date_range = Some(parse_date_range(value)?),
                "sort_by" => query.sort_by = Some(parse_sort(value)?),
                "limit" => {
                    query.limit = value
                        .as_u64()
                        .filter(|l| *l > 0)
                        .ok_or_else(|| KgError::InvalidQuery("limit must be a positive integer".into()))?
                        as usize;
                }
                other => {
                    let field = TextField::parse(other)
                        .ok_or_else(|| KgError::InvalidQuery(format!("unknown field {other:?}")))?;
                    let text = clause_text(field, value)?;
                    if !text.trim().is_empty() {
                        query.clauses.insert(field, text);
                    }
                }
            }
        }
        if !saw_params || query.result_parameters.is_empty() {
            return Err(KgError::MissingResultParameters);
        }
        query.validate()?;
        Ok(query)
    }
}

fn clause_text(field: TextField, value: &Value) -> Result<String, KgError> {
    match value {
        Value::String(s) => Ok(s.clone()),
        Value::Array(items) if field == TextField::Authors => items
            .iter()
            .map(|v| {
                v.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| KgError::InvalidQuery("authors must be strings".into()))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(|names| names.join(", ")),
        _ => Err(KgError::InvalidQuery(format!("{} expects text", field.name()))),
    }
}

fn parse_result_parameters(value: &Value) -> Result<Vec<ResultField>, KgError> {
    let items = match value {
        Value::Array(items) => items.clone(),
        // Models sometimes send "authors, title" instead of a list.
        Value::String(s) => s.split(',').map(|p| Value::from(p.trim())).collect(),
        _ => return Err(KgError::InvalidQuery("resultParameters must be a list".into())),
    };
    let mut fields = Vec::new();
    for item in items {
        let name = item
            .as_str()
            .ok_or_else(|| KgError::InvalidQuery("resultParameters entries must be strings".into()))?;
        if name.is_empty() {
            continue;
        }
        let field = ResultField::parse(name)
            .ok_or_else(|| KgError::InvalidQuery(format!("unknown result parameter {name:?}")))?;
        if !fields.contains(&field) {
            fields.push(field);
        }
    }
    Ok(fields)
}

fn parse_date_range(value: &Value) -> Result<DateRange, KgError> {
    let obj = value
        .as_object()
        .ok_or_else(|| KgError::InvalidQuery("publishDate must be an object with gte/lte".into()))?;
    let mut range = DateRange::default();
    for (key, bound) in obj {
        let text = bound
            .as_str()
            .ok_or_else(|| KgError::InvalidQuery(format!("publishDate.{key} must be a date string")))?;
        let date = parse_date(text)
            .ok_or_else(|| KgError::InvalidQuery(format!("publishDate.{key}: bad date {text:?}, expected yyyy/MM/dd")))?;
        match key.as_str() {
            "gte" => range.gte = Some(date),
            "lte" => range.lte = Some(date),
            other => return Err(KgError::InvalidQuery(format!("publishDate key {other:?} is not gte or lte"))),
        }
    }
    Ok(range)
}

fn parse_sort(value: &Value) -> Result<(ResultField, SortDirection), KgError> {
    let obj = value
        .as_object()
        .filter(|o| o.len() == 1)
        .ok_or_else(|| KgError::InvalidQuery("sort_by must hold exactly one field".into()))?;
    let (key, dir) = obj.iter().next().expect("len checked");
    let field = ResultField::parse(key).ok_or_else(|| KgError::InvalidQuery(format!("cannot sort by {key:?}")))?;
    let direction = match dir.as_str().map(str::to_ascii_lowercase).as_deref() {
        Some("asc") => SortDirection::Asc,
        Some("desc") => SortDirection::Desc,
        _ => return Err(KgError::InvalidQuery("sort direction must be 'asc' or 'desc'".into())),
    };
    Ok((field, direction))
}
