use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{Decision, ReviewRecord};

/// Default banner patterns; whitespace inside them may span line breaks.
pub const DEFAULT_BOILERPLATE: [&str; 2] = [
    r"Under\s+review\s+as\s+a\s+conference\s+paper\s+at\s+ICLR\s+\d{4}",
    r"Anonymous\s+authors\s+Paper\s+under\s+double-blind\s+review",
];

fn default_patterns() -> &'static [Regex] {
    static RE: OnceLock<Vec<Regex>> = OnceLock::new();
    RE.get_or_init(|| DEFAULT_BOILERPLATE.iter().map(|p| Regex::new(p).expect("static regex")).collect())
}

pub fn strip_boilerplate(paper_text: &str) -> String {
    strip_boilerplate_with(paper_text, default_patterns())
}

/// Remove every match of every pattern. Removal repeats until nothing
/// matches, so a banner split around another banner does not survive.
pub fn strip_boilerplate_with(paper_text: &str, patterns: &[Regex]) -> String {
    let mut text = paper_text.to_string();
    loop {
        let mut changed = false;
        for re in patterns {
            if re.is_match(&text) {
                text = re.replace_all(&text, "").into_owned();
                changed = true;
            }
        }
        if !changed {
            return text;
        }
    }
}

pub fn count_tokens(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConsistencyRule {
    /// Drop a review that contradicts the decision and has the strictly
    /// lowest confidence of its paper's reviews; repeated to a fixpoint.
    #[default]
    Conjunctive,
    /// Among the reviews contradicting the decision, drop those with the
    /// lowest confidence. Single pass.
    LowestContradicting,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanConfig {
    pub min_tokens: usize,
    pub max_tokens: usize,
    /// Newline characters as a fraction of all characters.
    pub max_newline_ratio: f64,
    /// This many consecutive blank lines is excessive.
    pub blank_run: usize,
    pub consistency: ConsistencyRule,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            min_tokens: 100,
            max_tokens: 2000,
            max_newline_ratio: 0.15,
            blank_run: 5,
            consistency: ConsistencyRule::Conjunctive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RemovalReason {
    TooShort,
    TooLong,
    ExcessiveLineBreaks,
    InconsistentLowConfidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovedReview {
    pub review: ReviewRecord,
    pub reasons: Vec<RemovalReason>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CleanOutcome {
    pub kept: Vec<ReviewRecord>,
    pub removed: Vec<RemovedReview>,
}

impl CleanOutcome {
    pub fn reason_counts(&self) -> BTreeMap<RemovalReason, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.removed {
            for reason in &r.reasons {
                *counts.entry(*reason).or_default() += 1;
            }
        }
        counts
    }
}

pub fn excessive_line_breaks(text: &str, config: &CleanConfig) -> bool {
    let chars = text.chars().count();
    let newlines = text.chars().filter(|&c| c == '\n').count();
    if chars > 0 && newlines as f64 > config.max_newline_ratio * chars as f64 {
        return true;
    }
    let mut run = 0;
    for line in text.split('\n') {
        if line.trim().is_empty() {
            run += 1;
            if config.blank_run > 0 && run >= config.blank_run {
                return true;
            }
        } else {
            run = 0;
        }
    }
    false
}

fn text_reasons(review: &ReviewRecord, config: &CleanConfig) -> Vec<RemovalReason> {
    let tokens = count_tokens(&review.text);
    let mut reasons = Vec::new();
    if tokens < config.min_tokens {
        reasons.push(RemovalReason::TooShort);
    }
    if tokens > config.max_tokens {
        reasons.push(RemovalReason::TooLong);
    }
    if excessive_line_breaks(&review.text, config) {
        reasons.push(RemovalReason::ExcessiveLineBreaks);
    }
    reasons
}

/// Indices (into `alive`) that the consistency rule removes in one pass.
fn inconsistent(reviews: &[ReviewRecord], alive: &[usize], decisions: &HashMap<String, Decision>, rule: ConsistencyRule) -> Vec<usize> {
    let mut by_paper: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for &i in alive {
        by_paper.entry(reviews[i].paper_id.as_str()).or_default().push(i);
    }
    let mut out = Vec::new();
    for (paper, members) in by_paper {
        let Some(&decision) = decisions.get(paper) else {
            continue;
        };
        match rule {
            ConsistencyRule::Off => {}
            ConsistencyRule::Conjunctive => {
                if members.len() < 2 {
                    continue;
                }
                let min = members.iter().map(|&i| reviews[i].confidence).min().expect("non-empty");
                let lowest: Vec<usize> = members.iter().copied().filter(|&i| reviews[i].confidence == min).collect();
                if let [only] = lowest[..] {
                    if !reviews[only].recommendation.agrees_with(decision) {
                        out.push(only);
                    }
                }
            }
            ConsistencyRule::LowestContradicting => {
                let contra: Vec<usize> = members
                    .iter()
                    .copied()
                    .filter(|&i| !reviews[i].recommendation.agrees_with(decision))
                    .collect();
                if let Some(min) = contra.iter().map(|&i| reviews[i].confidence).min() {
                    out.extend(contra.into_iter().filter(|&i| reviews[i].confidence == min));
                }
            }
        }
    }
    out
}

/// Apply the text rules to each review, then the consistency rule to the
/// survivors. Kept reviews stay in input order.
pub fn clean_reviews(records: Vec<ReviewRecord>, decisions: &HashMap<String, Decision>, config: &CleanConfig) -> CleanOutcome {
    let mut reasons: Vec<Vec<RemovalReason>> = records.iter().map(|r| text_reasons(r, config)).collect();
    let mut alive: Vec<usize> = (0..records.len()).filter(|&i| reasons[i].is_empty()).collect();
    loop {
        let drop = inconsistent(&records, &alive, decisions, config.consistency);
        if drop.is_empty() {
            break;
        }
        for &i in &drop {
            reasons[i].push(RemovalReason::InconsistentLowConfidence);
        }
        alive.retain(|i| !drop.contains(i));
        if config.consistency != ConsistencyRule::Conjunctive {
            break;
        }
    }
    let mut outcome = CleanOutcome::default();
    for (review, reasons) in records.into_iter().zip(reasons) {
        if reasons.is_empty() {
            outcome.kept.push(review);
        } else {
            outcome.removed.push(RemovedReview { review, reasons });
        }
    }
    outcome
}
