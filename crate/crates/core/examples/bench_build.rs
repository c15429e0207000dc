//! Build leakage-free multiple-choice items from method and dataset records.

use workbench_core::bench::{build_dataset, check_item, DatasetRecord, ItemMode, MethodRecord, SourceRecord};

fn method(name: &str, description: &str, paper: &str, collection: &str) -> MethodRecord {
    MethodRecord {
        name: name.into(),
        full_name: None,
        description: description.into(),
        introducing_paper_title: paper.into(),
        collection_path: collection.into(),
        area: "Computer Vision".into(),
    }
}

fn main() {
    let blocks = "Computer Vision/Skip Connection Blocks/Skip Connection Blocks";
    let methods = vec![
        method("Bottleneck Residual Block", "A Bottleneck Residual Block uses 1x1 convolutions to reduce and restore channels.", "Deep Residual Learning for Image Recognition", blocks),
        method("Dense Block", "A dense block connects each layer to every other layer in a feed-forward fashion.", "Densely Connected Convolutional Networks", blocks),
        method("Inverted Residual Block", "Expands channels, applies a depthwise convolution, then projects back.", "MobileNetV2: Inverted Residuals and Linear Bottlenecks", blocks),
        method("Squeeze-and-Excitation Block", "Recalibrates channel responses using global pooling and gating.", "Squeeze-and-Excitation Networks", blocks),
    ];
    let datasets = vec![DatasetRecord {
        name: "CIFAR-10".into(),
        full_name: Some("Canadian Institute for Advanced Research, 10 classes".into()),
        description: "CIFAR-10 contains 60,000 32x32 colour images in 10 classes. See https://www.cs.toronto.edu/~kriz/cifar.html".into(),
        introducing_paper_title: "Learning Multiple Layers of Features from Tiny Images".into(),
        modality: "Images".into(),
    }];

    let (items, stats) = build_dataset(&methods, &datasets, 7, ItemMode::Both);
    println!("counts {:?}, skipped {}", stats.counts, stats.skipped.len());
    for skip in &stats.skipped {
        println!("  skipped {skip:?}");
    }
    let sources: Vec<SourceRecord> = methods.iter().map(SourceRecord::from).chain(datasets.iter().map(SourceRecord::from)).collect();
    for item in &items {
        println!("\n{} [{}] {}", item.id, item.qtype, item.question);
        for (i, option) in item.options.iter().enumerate() {
            let mark = if i == item.answer_index { "*" } else { " " };
            println!("  {mark} {} {option}", (b'A' + i as u8) as char);
        }
        let source = sources.iter().find(|s| s.id == item.provenance.source).unwrap();
        assert!(check_item(item, source).is_empty());
    }
}
