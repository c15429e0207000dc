use super::{EvalTask, QAItem};

pub const TEMPLATE_VERSION: &str = "mc-harness-v1";

fn header(subject: &str) -> String {
    format!(
        "The following are multiple choice questions (with answers) about {}.",
        subject.replace('_', " ")
    )
}

fn item_block(task: &EvalTask, item: &QAItem, answer: Option<&str>) -> String {
    let mut block = String::new();
    if let Some(context) = item.context.as_deref().filter(|c| !c.trim().is_empty()) {
        block.push_str(&format!("Context: {}\nQuestion: {}\n", context.trim(), item.question.trim()));
    } else {
        block.push_str(item.question.trim());
        block.push('\n');
    }
    if let Some(options) = &item.options {
        for (label, option) in task.choice_labels.iter().zip(options) {
            block.push_str(&format!("{label}. {}\n", option.trim()));
        }
    }
    match answer {
        Some(label) => block.push_str(&format!("Answer: {label}")),
        None => block.push_str("Answer:"),
    }
    block
}

fn same_item(a: &QAItem, b: &QAItem) -> bool {
    a.question.trim() == b.question.trim() && a.options == b.options && a.context == b.context
}

/// The exemplars actually shown before `item`: the first `n_shots` dev
/// items of its subject, never the item itself.
pub fn exemplars_for<'a>(task: &'a EvalTask, item: &QAItem) -> Vec<&'a QAItem> {
    task.dev_pool
        .get(&item.subject)
        .map(|pool| {
            pool.iter()
                .filter(|ex| !same_item(ex, item))
                .take(task.n_shots)
                .collect()
        })
        .unwrap_or_default()
}

/// Header, `n_shots` solved exemplars, then the test item ending in
/// `Answer:`. Blocks are separated by a blank line.
pub fn build_fewshot_prompt(task: &EvalTask, subject: &str, item: &QAItem) -> String {
    let mut blocks = vec![header(subject)];
    for ex in exemplars_for(task, item) {
        blocks.push(item_block(task, ex, Some(&ex.gold)));
    }
    blocks.push(item_block(task, item, None));
    blocks.join("\n\n")
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// First label occurring at a token boundary in `completion`. Word labels
/// (longer than one character) match case-insensitively; single letters
/// must match exactly, so the article "a" is not read as option A.
pub fn extract_answer(completion: &str, labels: &[String]) -> Option<String> {
    let chars: Vec<char> = completion.chars().collect();
    let prepared: Vec<(Vec<char>, bool)> = labels
        .iter()
        .map(|l| (l.chars().collect::<Vec<_>>(), l.chars().count() > 1))
        .filter(|(c, _)| !c.is_empty())
        .collect();
    for start in 0..chars.len() {
        if start > 0 && is_word_char(chars[start - 1]) {
            continue;
        }
        for (idx, (label, fold)) in prepared.iter().enumerate() {
            let end = start + label.len();
            if end > chars.len() {
                continue;
            }
            let hit = chars[start..end].iter().zip(label).all(|(a, b)| {
                if *fold {
                    a.to_lowercase().eq(b.to_lowercase())
                } else {
                    a == b
                }
            });
            if hit && (end == chars.len() || !is_word_char(chars[end])) {
                return Some(labels[idx].clone());
            }
        }
    }
    None
}
