use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{MetaReview, ReviewError, ReviewPrediction};

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// An exact fraction. Counts are kept unreduced so K/M reads as counted;
/// [`Ratio::reduced`] gives lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub numerator: u64,
    pub denominator: u64,
}

impl Ratio {
    pub fn new(numerator: u64, denominator: u64) -> Self {
        Ratio { numerator, denominator }
    }

    pub fn value(&self) -> Option<f64> {
        (self.denominator > 0).then(|| self.numerator as f64 / self.denominator as f64)
    }

    pub fn reduced(&self) -> Ratio {
        let g = gcd(self.numerator, self.denominator).max(1);
        Ratio::new(self.numerator / g, self.denominator / g)
    }

    /// Exact equality of the represented values.
    pub fn same_value(&self, other: &Ratio) -> bool {
        self.numerator as u128 * other.denominator as u128 == other.numerator as u128 * self.denominator as u128
            && (self.denominator == 0) == (other.denominator == 0)
    }

    fn add(self, other: Ratio) -> Ratio {
        let d = self.denominator / gcd(self.denominator, other.denominator) * other.denominator;
        Ratio::new(
            self.numerator * (d / self.denominator) + other.numerator * (d / other.denominator),
            d,
        )
        .reduced()
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            Some(v) => write!(f, "{}/{} = {v:.4}", self.numerator, self.denominator),
            None => write!(f, "0/0 = n/a"),
        }
    }
}

fn metas_by_paper<'a>(predictions: &[ReviewPrediction], metas: &'a [MetaReview]) -> Result<HashMap<&'a str, &'a MetaReview>, ReviewError> {
    let mut by_paper = HashMap::new();
    for meta in metas {
        if by_paper.insert(meta.paper_id.as_str(), meta).is_some() {
            return Err(ReviewError::DuplicateMeta(meta.paper_id.clone()));
        }
    }
    let mut missing: Vec<String> = predictions
        .iter()
        .filter(|p| !by_paper.contains_key(p.paper_id.as_str()))
        .map(|p| p.paper_id.clone())
        .collect();
    missing.sort();
    missing.dedup();
    if missing.is_empty() {
        Ok(by_paper)
    } else {
        Err(ReviewError::MissingMeta(missing))
    }
}

/// K/M: predictions whose recommendation matches the meta decision.
pub fn recommendation_accuracy(predictions: &[ReviewPrediction], metas: &[MetaReview]) -> Result<Ratio, ReviewError> {
    let by_paper = metas_by_paper(predictions, metas)?;
    let k = predictions
        .iter()
        .filter(|p| p.recommendation.agrees_with(by_paper[p.paper_id.as_str()].decision))
        .count();
    Ok(Ratio::new(k as u64, predictions.len() as u64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AspectMetrics {
    /// L/N over every prediction's meta aspects.
    pub recall: Ratio,
    /// Correct aspect predictions over all aspect predictions.
    pub accuracy: Ratio,
    /// Per-prediction accuracy averaged over predictions that name at
    /// least one aspect, in lowest terms.
    pub accuracy_macro: Ratio,
}

pub fn aspect_metrics(predictions: &[ReviewPrediction], metas: &[MetaReview]) -> Result<AspectMetrics, ReviewError> {
    let by_paper = metas_by_paper(predictions, metas)?;
    let (mut hits, mut mentions, mut predicted) = (0u64, 0u64, 0u64);
    let mut macro_sum = Ratio::new(0, 1);
    let mut macro_n = 0u64;
    for p in predictions {
        let meta = &by_paper[p.paper_id.as_str()].aspects;
        let overlap = p.aspects.intersection(meta).count() as u64;
        hits += overlap;
        mentions += meta.len() as u64;
        predicted += p.aspects.len() as u64;
        if !p.aspects.is_empty() {
            macro_sum = macro_sum.add(Ratio::new(overlap, p.aspects.len() as u64));
            macro_n += 1;
        }
    }
    let accuracy_macro = if macro_n == 0 {
        Ratio::new(0, 0)
    } else {
        Ratio::new(macro_sum.numerator, macro_sum.denominator * macro_n).reduced()
    };
    Ok(AspectMetrics {
        recall: Ratio::new(hits, mentions),
        accuracy: Ratio::new(hits, predicted),
        accuracy_macro,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewMetrics {
    pub recommendation_accuracy: Ratio,
    pub aspect_recall: Ratio,
    pub aspect_accuracy: Ratio,
    pub aspect_accuracy_macro: Ratio,
}

pub fn review_metrics(predictions: &[ReviewPrediction], metas: &[MetaReview]) -> Result<ReviewMetrics, ReviewError> {
    let aspects = aspect_metrics(predictions, metas)?;
    Ok(ReviewMetrics {
        recommendation_accuracy: recommendation_accuracy(predictions, metas)?,
        aspect_recall: aspects.recall,
        aspect_accuracy: aspects.accuracy,
        aspect_accuracy_macro: aspects.accuracy_macro,
    })
}

pub fn render_metrics_table(m: &ReviewMetrics) -> String {
    let headers = ["Final Recommendation Accuracy", "Aspect Recall", "Aspect Accuracy"];
    let cells = [
        m.recommendation_accuracy.to_string(),
        m.aspect_recall.to_string(),
        m.aspect_accuracy.to_string(),
    ];
    let widths: Vec<usize> = headers.iter().zip(&cells).map(|(h, c)| h.len().max(c.len())).collect();
    let row = |items: &[String]| {
        let padded: Vec<String> = items.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
        format!("| {} |\n", padded.join(" | "))
    };
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    let mut out = row(&headers.map(String::from));
    out.push_str(&format!("|-{}-|\n", rule.join("-|-")));
    out.push_str(&row(&cells));
    out
}
