//! Peer-review corpus tooling: cleaning, SFT formatting and the three
//! review metrics (final recommendation accuracy, aspect recall, aspect
//! accuracy).

mod clean;
mod metrics;

use std::collections::BTreeSet;
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

pub use clean::{
    clean_reviews, count_tokens, excessive_line_breaks, strip_boilerplate, strip_boilerplate_with, CleanConfig,
    CleanOutcome, ConsistencyRule, RemovalReason, RemovedReview, DEFAULT_BOILERPLATE,
};
pub use metrics::{aspect_metrics, recommendation_accuracy, render_metrics_table, review_metrics, AspectMetrics, Ratio, ReviewMetrics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aspect {
    Clarity,
    MeaningfulComparison,
    Motivation,
    Originality,
    Replicability,
    Soundness,
    Substance,
}

impl Aspect {
    pub const ALL: [Aspect; 7] = [
        Aspect::Clarity,
        Aspect::MeaningfulComparison,
        Aspect::Motivation,
        Aspect::Originality,
        Aspect::Replicability,
        Aspect::Soundness,
        Aspect::Substance,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Recommendation {
    #[serde(rename = "accept-leaning", alias = "accept")]
    AcceptLeaning,
    #[serde(rename = "reject-leaning", alias = "reject")]
    RejectLeaning,
}

impl Recommendation {
    /// Ratings strictly above the midpoint of `[min, max]` lean accept.
    pub fn from_rating(rating: f64, scale: Scale) -> Self {
        if rating * 2.0 > (scale.min + scale.max) as f64 {
            Recommendation::AcceptLeaning
        } else {
            Recommendation::RejectLeaning
        }
    }

    pub fn agrees_with(self, decision: Decision) -> bool {
        matches!(
            (self, decision),
            (Recommendation::AcceptLeaning, Decision::Accept) | (Recommendation::RejectLeaning, Decision::Reject)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scale {
    pub min: i64,
    pub max: i64,
}

impl Default for Scale {
    fn default() -> Self {
        Scale { min: 1, max: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReviewRecord {
    pub paper_id: String,
    pub text: String,
    pub recommendation: Recommendation,
    pub confidence: i64,
    pub confidence_scale: Scale,
    #[serde(default)]
    pub aspects: BTreeSet<Aspect>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReview {
    paper_id: String,
    text: String,
    #[serde(default)]
    recommendation: Option<Recommendation>,
    #[serde(default)]
    rating: Option<f64>,
    #[serde(default)]
    rating_scale: Option<Scale>,
    confidence: i64,
    #[serde(default)]
    confidence_scale: Option<Scale>,
    #[serde(default)]
    aspects: BTreeSet<Aspect>,
}

impl TryFrom<RawReview> for ReviewRecord {
    type Error = String;

    fn try_from(raw: RawReview) -> Result<Self, String> {
        let recommendation = match (raw.recommendation, raw.rating) {
            (Some(r), _) => r,
            (None, Some(rating)) => {
                let scale = raw.rating_scale.ok_or("rating given without rating_scale")?;
                if scale.min >= scale.max || rating < scale.min as f64 || rating > scale.max as f64 {
                    return Err(format!("rating {rating} outside scale {}..={}", scale.min, scale.max));
                }
                Recommendation::from_rating(rating, scale)
            }
            (None, None) => return Err("needs recommendation or rating".into()),
        };
        let confidence_scale = raw.confidence_scale.unwrap_or_default();
        if raw.confidence < confidence_scale.min || raw.confidence > confidence_scale.max {
            return Err(format!(
                "confidence {} outside scale {}..={}",
                raw.confidence, confidence_scale.min, confidence_scale.max
            ));
        }
        Ok(ReviewRecord {
            paper_id: raw.paper_id,
            text: raw.text,
            recommendation,
            confidence: raw.confidence,
            confidence_scale,
            aspects: raw.aspects,
        })
    }
}

impl<'de> Deserialize<'de> for ReviewRecord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        RawReview::deserialize(d)?.try_into().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaReview {
    pub paper_id: String,
    pub decision: Decision,
    #[serde(default)]
    pub aspects: BTreeSet<Aspect>,
}

/// A generated review reduced to what the metrics compare.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewPrediction {
    pub paper_id: String,
    pub recommendation: Recommendation,
    #[serde(default)]
    pub aspects: BTreeSet<Aspect>,
}

#[derive(Debug, thiserror::Error)]
pub enum ReviewError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no meta-review for paper(s): {}", .0.join(", "))]
    MissingMeta(Vec<String>),
    #[error("duplicate meta-review for paper {0}")]
    DuplicateMeta(String),
    #[error("{0} must not be empty")]
    EmptyInput(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn parse_jsonl<T: serde::de::DeserializeOwned>(reader: impl BufRead) -> Result<Vec<T>, ReviewError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| ReviewError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub const REVIEW_INSTRUCTION: &str = "You are a professional reviewer in the field of computer science and artificial intelligence. I will give you a paper. You need to review this paper and discuss the novelty and originality of ideas, correctness, clarity, the significance of results, potential impact, and quality of the presentation. You need to give a complete review opinion including the strengths of this paper, your main concerns regarding this paper, and specific reasons for its assessment. This is the paper for your review: {Paper Content}";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftRecord {
    pub prompt: String,
    pub output: String,
}

impl SftRecord {
    pub fn to_jsonl(&self) -> String {
        serde_json::to_string(self).expect("sft record serializes") + "\n"
    }
}

pub fn format_sft_record(paper_text: &str, review_text: &str) -> Result<SftRecord, ReviewError> {
    if paper_text.trim().is_empty() {
        return Err(ReviewError::EmptyInput("paper text"));
    }
    if review_text.trim().is_empty() {
        return Err(ReviewError::EmptyInput("review text"));
    }
    Ok(SftRecord {
        prompt: REVIEW_INSTRUCTION.replace("{Paper Content}", paper_text),
        output: review_text.to_string(),
    })
}

impl fmt::Display for Aspect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = serde_json::to_value(self).expect("aspect serializes");
        f.write_str(v.as_str().unwrap_or_default())
    }
}
