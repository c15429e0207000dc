//! Reference implementations written without the library's code paths.

use std::collections::BTreeSet;

use serde_json::Value;
use workbench_core::agent::{parse_action_blob, BlobError};
use workbench_core::kg::PaperRecord;
use workbench_core::review::{Aspect, Decision, MetaReview, Recommendation, ReviewPrediction};

pub fn blob_error_kind(e: &BlobError) -> &'static str {
    match e {
        BlobError::MultipleActions => "multiple-actions",
        BlobError::NotJson(_) => "not-json",
        BlobError::NotObject => "not-object",
        BlobError::MissingKey(_) => "missing-key",
        BlobError::ExtraKey(_) => "extra-key",
        BlobError::BadAction => "bad-action",
        BlobError::InputNotObject => "input-not-object",
    }
}

/// Check one entry of the blob case fixture; `Err` describes a mismatch.
pub fn check_blob_case(case: &Value) -> Result<(), String> {
    let name = case["name"].as_str().unwrap_or("?");
    let text = case["text"].as_str().ok_or(format!("{name}: no text"))?;
    match (case["expect"].as_str().unwrap_or(""), parse_action_blob(text)) {
        ("ok", Ok(blob)) => {
            if blob.action != case["action"].as_str().unwrap_or("") || Value::Object(blob.action_input.clone()) != case["input"] {
                return Err(format!("{name}: parsed {blob:?}"));
            }
            Ok(())
        }
        (expected, Err(e)) if blob_error_kind(&e) == expected => Ok(()),
        (expected, Err(e)) => Err(format!("{name}: expected {expected}, got {e}")),
        (expected, Ok(blob)) => Err(format!("{name}: expected {expected}, parsed {blob:?}")),
    }
}

/// Whole-term replacement by plain scanning over lowercased ASCII text.
pub fn mask_oracle(text: &str, name: &str, full_name: Option<&str>) -> String {
    fn replace(text: &str, term: &str) -> String {
        let lower = text.to_ascii_lowercase();
        let needle = term.to_ascii_lowercase();
        let word = |c: Option<char>| c.is_some_and(|c| c.is_ascii_alphanumeric());
        let mut out = String::new();
        let mut pos = 0;
        let mut from = 0;
        while let Some(off) = lower[from..].find(&needle) {
            let at = from + off;
            let end = at + needle.len();
            let before = lower[..at].chars().last();
            let after = lower[end..].chars().next();
            if (word(needle.chars().next()) && word(before)) || (word(needle.chars().last()) && word(after)) {
                from = at + 1;
                continue;
            }
            out.push_str(&text[pos..at]);
            out.push_str("()");
            pos = end;
            from = end;
        }
        out.push_str(&text[pos..]);
        out
    }
    let mut text = text.to_string();
    if let Some(full) = full_name {
        text = replace(&text, full);
    }
    replace(&text, name)
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Review metric counts recomputed from scratch.
#[derive(Debug, PartialEq, Eq)]
pub struct Recount {
    /// (K, M)
    pub recommendation: (u64, u64),
    /// (L, N)
    pub recall: (u64, u64),
    /// (correct aspect predictions, aspect predictions)
    pub accuracy: (u64, u64),
    /// Mean per-prediction accuracy as a reduced fraction.
    pub accuracy_macro: (u128, u128),
}

pub fn review_recount(preds: &[ReviewPrediction], metas: &[MetaReview]) -> Recount {
    let mut k = 0;
    let (mut hits, mut mentions, mut predicted) = (0, 0, 0);
    let (mut num, mut den, mut counted) = (0u128, 1u128, 0u128);
    for p in preds {
        let meta = metas.iter().find(|m| m.paper_id == p.paper_id).expect("meta for every prediction");
        let agree = matches!(
            (p.recommendation, meta.decision),
            (Recommendation::AcceptLeaning, Decision::Accept) | (Recommendation::RejectLeaning, Decision::Reject)
        );
        k += u64::from(agree);
        let mut overlap = 0;
        for a in Aspect::ALL {
            let in_meta = meta.aspects.contains(&a);
            let in_pred = p.aspects.contains(&a);
            mentions += u64::from(in_meta);
            predicted += u64::from(in_pred);
            overlap += u64::from(in_meta && in_pred);
        }
        hits += overlap;
        if !p.aspects.is_empty() {
            let (a, b) = (overlap as u128, p.aspects.len() as u128);
            num = num * b + a * den;
            den *= b;
            let g = gcd(num, den);
            (num, den) = (num / g, den / g);
            counted += 1;
        }
    }
    let den = den * counted;
    let g = gcd(num, den).max(1);
    Recount {
        recommendation: (k, preds.len() as u64),
        recall: (hits, mentions),
        accuracy: (hits, predicted),
        accuracy_macro: (num / g, den / g),
    }
}

fn set(items: &[String]) -> BTreeSet<&str> {
    items.iter().map(String::as_str).collect()
}

fn jaccard_pair(a: &BTreeSet<&str>, b: &BTreeSet<&str>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        0.0
    } else {
        a.intersection(b).count() as f64 / union as f64
    }
}

/// Pairwise similar-paper ranking: 0.7 reference overlap + 0.3 keyword
/// overlap, ties by id.
pub fn similar_oracle(records: &[PaperRecord], id: &str, k: usize) -> Vec<(String, f64)> {
    let target = records.iter().find(|r| r.id == id).expect("known id");
    let mut all: Vec<(String, f64)> = records
        .iter()
        .filter(|r| r.id != id)
        .map(|r| {
            let refs = jaccard_pair(&set(&target.references), &set(&r.references));
            let kws = jaccard_pair(&set(&target.keywords), &set(&r.keywords));
            (r.id.clone(), 0.7 * refs + 0.3 * kws)
        })
        .collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}
