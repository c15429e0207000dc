//! Clean peer reviews, format SFT pairs and score generated reviews.

use std::collections::{BTreeSet, HashMap};

use workbench_core::review::{
    clean_reviews, format_sft_record, render_metrics_table, review_metrics, Aspect, CleanConfig, Decision, MetaReview,
    Recommendation, ReviewPrediction, ReviewRecord, Scale,
};

fn words(n: usize) -> String {
    (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let review = |text: String, recommendation, confidence| ReviewRecord {
        paper_id: "p1".into(),
        text,
        recommendation,
        confidence,
        confidence_scale: Scale::default(),
        aspects: BTreeSet::new(),
    };
    let reviews = vec![
        review(words(300), Recommendation::AcceptLeaning, 4),
        review(words(250), Recommendation::RejectLeaning, 2),
        review(words(40), Recommendation::AcceptLeaning, 5),
    ];
    let decisions = HashMap::from([("p1".to_string(), Decision::Accept)]);
    let outcome = clean_reviews(reviews, &decisions, &CleanConfig::default());
    println!("kept {}; removed {:?}", outcome.kept.len(), outcome.removed.iter().map(|r| &r.reasons).collect::<Vec<_>>());

    let record = format_sft_record("Title: A Paper\nAbstract: ...", "Strengths: clear writing.")?;
    println!("\n{}", record.to_jsonl());

    use Aspect::*;
    let metas = vec![
        MetaReview { paper_id: "1".into(), decision: Decision::Accept, aspects: [Clarity, Originality].into() },
        MetaReview { paper_id: "2".into(), decision: Decision::Reject, aspects: [Soundness].into() },
        MetaReview { paper_id: "3".into(), decision: Decision::Reject, aspects: BTreeSet::new() },
    ];
    let preds = vec![
        ReviewPrediction { paper_id: "1".into(), recommendation: Recommendation::AcceptLeaning, aspects: [Clarity, Substance].into() },
        ReviewPrediction { paper_id: "2".into(), recommendation: Recommendation::AcceptLeaning, aspects: [Soundness].into() },
        ReviewPrediction { paper_id: "3".into(), recommendation: Recommendation::RejectLeaning, aspects: [Motivation].into() },
    ];
    print!("{}", render_metrics_table(&review_metrics(&preds, &metas)?));
    Ok(())
}
