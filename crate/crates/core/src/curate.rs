//! Web-corpus curation: the data-quality labeling prompt, verdict parsing,
//! a declarative keep policy, and title/abstract generation records.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::gateway::{Backend, CompletionRequest, GatewayError};

pub const SYS_PROMPT: &str = "In terms of checking data quality, you are a helpful and precise assistant.";

pub const PROMPT: &str = r#"Please assess the provided CommonCrawl sample based on the following criteria and return the results in the specified JSON format.

The evaluation criteria are as follows:
1. Quality: Evaluate grammar completeness, language coherence, information accuracy, and the presence of low-quality content such as explicit, violent, advertising, promotional, or recruitment-related information. Categorize quality as "Excellent", "Average", or "Poor";

2. Domain: Determine if the sample is related to fields such as computer science, natural sciences, social sciences, engineering and technology, medical and health, arts and literature, humanities, economics and management, law, education, agricultural sciences, space sciences, etc., and categorize it accordingly;

3. Depth: Assess the content as "Beginner", "Intermediate", "Advanced", or "Expert";

4. Category: Identify whether it falls under the category of "Academic Article", "Academic Report", "Monograph", "Whitepaper", "Technical Blog", "Popular Science Article","Forum Discussion","News Report", or "Promotional Content";

5. Suitability Rating: Determine whether the sample is suitable for training academic large models, imparting serious knowledge to the model, enhancing the model's academic, common-sense, logical, and reasoning capabilities. Suitability has three standards: "Highly Suitable", "Average", or "Not Suitable".

The returned results should be in the following format:
{
Quality: Excellent/Average/Poor,
Domain: Computer Science/Natural Sciences/Social Sciences/Engineering and Technology/Medical and Health/Arts and Literature/Other/Promotional Content,
Depth: Beginner/Intermediate/Advanced/Expert,
Category: Academic Article/Academic Report/Monograph/Whitepaper/Technical Blog/Popular Science Article/Forum Discussion/News Report/Promotional Content/Other,
Suitability: Highly Suitable/Average/Not Suitable
}.

Please note that you only need to directly return the JSON results without providing any additional unnecessary text."#;

pub const BEGIN_GENERATE: &str = "<begin_generate>";
pub const ABSTRACT_DELIMITER: &str = ";Abstract:";

#[derive(Debug, thiserror::Error)]
pub enum CurateError {
    #[error("sample text is empty")]
    EmptySample,
    #[error("no JSON object found in reply")]
    Unparseable,
    #[error("verdict is missing {0}")]
    MissingField(&'static str),
    #[error("invalid value for {field}: {value:?}")]
    InvalidValue { field: &'static str, value: String },
    #[error("{0} is empty")]
    EmptyField(&'static str),
    #[error("section {0} was requested but the record has none")]
    MissingSection(&'static str),
    #[error("{field} contains the reserved delimiter {delimiter:?}")]
    Delimiter { field: &'static str, delimiter: &'static str },
    #[error("invalid policy: {0}")]
    Policy(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

macro_rules! closed_set {
    ($name:ident, $field:literal, { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }

            pub fn parse(value: &str) -> Result<Self, CurateError> {
                let v = value.trim();
                Self::ALL
                    .iter()
                    .copied()
                    .find(|x| x.as_str().eq_ignore_ascii_case(v))
                    .ok_or_else(|| CurateError::InvalidValue { field: $field, value: value.to_string() })
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                $name::parse(&s).map_err(serde::de::Error::custom)
            }
        }
    };
}

closed_set!(Quality, "Quality", { Excellent => "Excellent", Average => "Average", Poor => "Poor" });
closed_set!(Depth, "Depth", {
    Beginner => "Beginner",
    Intermediate => "Intermediate",
    Advanced => "Advanced",
    Expert => "Expert",
});
closed_set!(Suitability, "Suitability", {
    HighlySuitable => "Highly Suitable",
    Average => "Average",
    NotSuitable => "Not Suitable",
});

pub const LISTED_DOMAINS: [&str; 8] = [
    "Computer Science",
    "Natural Sciences",
    "Social Sciences",
    "Engineering and Technology",
    "Medical and Health",
    "Arts and Literature",
    "Other",
    "Promotional Content",
];

pub const LISTED_CATEGORIES: [&str; 10] = [
    "Academic Article",
    "Academic Report",
    "Monograph",
    "Whitepaper",
    "Technical Blog",
    "Popular Science Article",
    "Forum Discussion",
    "News Report",
    "Promotional Content",
    "Other",
];

/// Domain and category lists end in "Other", so unlisted labels are kept
/// as given; listed ones are normalized to their listed spelling.
fn open_value(field: &'static str, value: &str, listed: &[&str]) -> Result<String, CurateError> {
    let v = value.trim();
    if v.is_empty() {
        return Err(CurateError::InvalidValue {
            field,
            value: value.to_string(),
        });
    }
    Ok(listed
        .iter()
        .find(|l| l.eq_ignore_ascii_case(v))
        .map_or_else(|| v.to_string(), |l| l.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CurationVerdict {
    #[serde(rename = "Quality")]
    pub quality: Quality,
    #[serde(rename = "Domain")]
    pub domain: String,
    #[serde(rename = "Depth")]
    pub depth: Depth,
    #[serde(rename = "Category")]
    pub category: String,
    #[serde(rename = "Suitability")]
    pub suitability: Suitability,
}

impl CurationVerdict {
    pub fn render(&self) -> String {
        serde_json::to_string(self).expect("verdict serializes")
    }
}

pub fn build_label_prompt(sample_text: &str) -> Result<(String, String), CurateError> {
    if sample_text.trim().is_empty() {
        return Err(CurateError::EmptySample);
    }
    Ok((SYS_PROMPT.to_string(), format!("{PROMPT}\n\n{sample_text}")))
}

/// The text sent to single-message backends: system prompt, blank line,
/// user prompt.
pub fn combined_label_prompt(sample_text: &str) -> Result<String, CurateError> {
    let (system, user) = build_label_prompt(sample_text)?;
    Ok(format!("{system}\n\n{user}"))
}

fn first_json_object(reply: &str) -> Option<Map<String, Value>> {
    for (i, _) in reply.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&reply[i..]).into_iter::<Value>();
        if let Some(Ok(Value::Object(map))) = stream.next() {
            return Some(map);
        }
    }
    None
}

/// `{Key: value, ...}` as printed in the prompt's own format block.
fn loose_object(reply: &str) -> Option<Map<String, Value>> {
    let start = reply.find('{')?;
    let end = start + reply[start..].find('}')?;
    let mut map = Map::new();
    for part in reply[start + 1..end].split([',', '\n']) {
        if let Some((k, v)) = part.split_once(':') {
            let v = v.trim().trim_matches('"').trim();
            map.insert(k.trim().trim_matches('"').to_string(), Value::String(v.to_string()));
        }
    }
    (!map.is_empty()).then_some(map)
}

fn key_of(raw: &str) -> String {
    raw.chars().filter(|c| c.is_alphanumeric()).collect::<String>().to_lowercase()
}

/// First JSON object in `reply`, with keys matched case-insensitively
/// and values checked against the prompt's enumerations.
pub fn parse_verdict(reply_text: &str) -> Result<CurationVerdict, CurateError> {
    let map = first_json_object(reply_text)
        .or_else(|| loose_object(reply_text))
        .ok_or(CurateError::Unparseable)?;
    let get = |field: &'static str| -> Result<String, CurateError> {
        let wanted = key_of(field);
        map.iter()
            .find(|(k, _)| {
                let k = key_of(k);
                k == wanted || k == format!("{wanted}rating")
            })
            .map(|(_, v)| match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            })
            .ok_or(CurateError::MissingField(field))
    };
    Ok(CurationVerdict {
        quality: Quality::parse(&get("Quality")?)?,
        domain: open_value("Domain", &get("Domain")?, &LISTED_DOMAINS)?,
        depth: Depth::parse(&get("Depth")?)?,
        category: open_value("Category", &get("Category")?, &LISTED_CATEGORIES)?,
        suitability: Suitability::parse(&get("Suitability")?)?,
    })
}

/// One keep rule; every listed field must match, absent fields match all.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeepRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality: Option<Vec<Quality>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<Vec<Depth>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suitability: Option<Vec<Suitability>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<Vec<String>>,
}

fn allows<T: PartialEq>(set: &Option<Vec<T>>, value: &T) -> bool {
    set.as_ref().is_none_or(|s| s.contains(value))
}

fn allows_text(set: &Option<Vec<String>>, value: &str) -> bool {
    set.as_ref().is_none_or(|s| s.iter().any(|x| x.eq_ignore_ascii_case(value)))
}

impl KeepRule {
    pub fn matches(&self, v: &CurationVerdict) -> bool {
        allows(&self.quality, &v.quality)
            && allows(&self.depth, &v.depth)
            && allows(&self.suitability, &v.suitability)
            && allows_text(&self.domain, &v.domain)
            && allows_text(&self.category, &v.category)
    }
}

/// Keep a sample when any rule matches its verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterPolicy {
    pub keep_if_any: Vec<KeepRule>,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy {
            keep_if_any: vec![
                KeepRule {
                    suitability: Some(vec![Suitability::HighlySuitable]),
                    ..KeepRule::default()
                },
                KeepRule {
                    quality: Some(vec![Quality::Excellent]),
                    suitability: Some(vec![Suitability::Average]),
                    ..KeepRule::default()
                },
            ],
        }
    }
}

impl FilterPolicy {
    pub fn from_json(text: &str) -> Result<Self, CurateError> {
        serde_json::from_str(text).map_err(|e| CurateError::Policy(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "decision", rename_all = "lowercase")]
pub enum FilterDecision {
    Keep { rule: usize },
    Drop { reason: String },
}

impl FilterDecision {
    pub fn is_keep(&self) -> bool {
        matches!(self, FilterDecision::Keep { .. })
    }
}

pub fn filter_decision(verdict: &CurationVerdict, policy: &FilterPolicy) -> FilterDecision {
    match policy.keep_if_any.iter().position(|r| r.matches(verdict)) {
        Some(rule) => FilterDecision::Keep { rule },
        None => FilterDecision::Drop {
            reason: format!(
                "no keep rule matched (quality={}, depth={}, suitability={})",
                verdict.quality, verdict.depth, verdict.suitability
            ),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub introduction: String,
    #[serde(default)]
    pub experiments: Option<String>,
    #[serde(default)]
    pub results: Option<String>,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Section {
    Experiments,
    Results,
}

impl std::str::FromStr for Section {
    type Err = CurateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "experiments" => Ok(Section::Experiments),
            "results" => Ok(Section::Results),
            other => Err(CurateError::Policy(format!("unknown section {other:?} (expected experiments or results)"))),
        }
    }
}

/// Introduction, then the requested optional sections in fixed order,
/// each separated by a newline, then `<begin_generate>Title:..;Abstract:..`.
pub fn format_title_abstract_record(record: &GenerationRecord, include: &[Section]) -> Result<String, CurateError> {
    for (field, value) in [
        ("introduction", &record.introduction),
        ("title", &record.title),
        ("abstract", &record.abstract_text),
    ] {
        if value.trim().is_empty() {
            return Err(CurateError::EmptyField(field));
        }
    }
    let mut parts = vec![record.introduction.as_str()];
    for (section, name, value) in [
        (Section::Experiments, "experiments", &record.experiments),
        (Section::Results, "results", &record.results),
    ] {
        if include.contains(&section) {
            parts.push(value.as_deref().filter(|v| !v.trim().is_empty()).ok_or(CurateError::MissingSection(name))?);
        }
    }
    let fields = [
        ("introduction", parts[0]),
        ("experiments", parts.get(1).copied().unwrap_or_default()),
        ("results", parts.get(2).copied().unwrap_or_default()),
    ];
    for (field, value) in fields {
        if value.contains(BEGIN_GENERATE) {
            return Err(CurateError::Delimiter {
                field,
                delimiter: BEGIN_GENERATE,
            });
        }
    }
    for (field, value) in [("title", &record.title), ("abstract", &record.abstract_text)] {
        for delimiter in [BEGIN_GENERATE, ABSTRACT_DELIMITER] {
            if value.contains(delimiter) {
                return Err(CurateError::Delimiter { field, delimiter });
            }
        }
    }
    Ok(format!(
        "{}{BEGIN_GENERATE}Title:{}{ABSTRACT_DELIMITER}{}",
        parts.join("\n"),
        record.title,
        record.abstract_text
    ))
}

/// Inverse of the title/abstract tail: `(title, abstract)`.
pub fn parse_title_abstract(text: &str) -> Option<(String, String)> {
    let (_, tail) = text.split_once(BEGIN_GENERATE)?;
    let (title, abstract_text) = tail.split_once(ABSTRACT_DELIMITER)?;
    Some((title.strip_prefix("Title:")?.to_string(), abstract_text.to_string()))
}

/// Outcome of labeling one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelResult {
    Verdict(CurationVerdict),
    Error(String),
}

/// Label every sample with the judge backend, up to `parallelism` calls in
/// flight; results come back in input order.
pub fn label_samples(samples: &[String], backend: &dyn Backend, parallelism: usize) -> Vec<LabelResult> {
    let slots: Vec<Mutex<Option<LabelResult>>> = samples.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let work = || loop {
        let i = next.fetch_add(1, Ordering::SeqCst);
        let Some(sample) = samples.get(i) else {
            break;
        };
        let result = combined_label_prompt(sample)
            .and_then(|prompt| {
                let request = CompletionRequest::new(prompt).with_max_tokens(256);
                Ok(backend.complete(&request)?.text)
            })
            .and_then(|reply| parse_verdict(&reply));
        *slots[i].lock().expect("slot lock") = Some(match result {
            Ok(v) => LabelResult::Verdict(v),
            Err(e) => LabelResult::Error(e.to_string()),
        });
    };
    let threads = parallelism.clamp(1, samples.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(&work);
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot lock").expect("every slot filled"))
        .collect()
}
