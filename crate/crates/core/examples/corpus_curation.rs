//! Label crawled samples with a judge model, filter them and format
//! title/abstract generation records.

use workbench_core::curate::{
    build_label_prompt, filter_decision, format_title_abstract_record, label_samples, parse_title_abstract, FilterPolicy,
    GenerationRecord, LabelResult, Section,
};
use workbench_core::gateway::{CompletionRequest, FnBackend};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let samples = vec![
        "We prove a tight bound on the sample complexity of agnostic learning.".to_string(),
        "BUY NOW! Limited offer on phone cases.".to_string(),
    ];
    let (system, user) = build_label_prompt(&samples[0])?;
    println!("{system}\n\n{user}\n");

    // a stand-in judge keyed on the sample text
    let judge = FnBackend::new("judge", |r: &CompletionRequest| {
        Ok(if r.prompt.contains("sample complexity") {
            r#"{"Quality": "Excellent", "Domain": "Computer Science", "Depth": "Expert", "Category": "Academic Article", "Suitability": "Highly Suitable"}"#
        } else {
            r#"{"Quality": "Poor", "Domain": "Promotional Content", "Depth": "Beginner", "Category": "Promotional Content", "Suitability": "Not Suitable"}"#
        }
        .to_string())
    });
    let policy = FilterPolicy::default();
    for (text, result) in samples.iter().zip(label_samples(&samples, &judge, 2)) {
        match result {
            LabelResult::Verdict(v) => println!("{:?} -> {:?}", text, filter_decision(&v, &policy)),
            LabelResult::Error(e) => println!("{text:?} -> error {e}"),
        }
    }

    let record = GenerationRecord {
        introduction: "Large models need curated data.".into(),
        experiments: Some("We filter 1M pages.".into()),
        results: None,
        title: "Curating Web Text".into(),
        abstract_text: "We label and filter crawled pages.".into(),
    };
    let text = format_title_abstract_record(&record, &[Section::Experiments])?;
    println!("\n{text}\n{:?}", parse_title_abstract(&text));
    Ok(())
}
