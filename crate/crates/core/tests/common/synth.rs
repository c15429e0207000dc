//! Seeded synthetic corpora for oracle tests.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use workbench_core::bench::{DatasetRecord, MethodRecord};
use workbench_core::curate::{CurationVerdict, Depth, Quality, Suitability};
use workbench_core::eval::{build_fewshot_prompt, EvalTask, QAItem};
use workbench_core::kg::PaperRecord;
use workbench_core::review::{Aspect, Decision, MetaReview, Recommendation, ReviewPrediction};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const SYLLABLES: [&str; 24] = [
    "ka", "lo", "mi", "ru", "ven", "tas", "qo", "zel", "pra", "dun", "xi", "bor", "nel", "fy", "gar", "hu", "jix", "wem",
    "sto", "plin", "dra", "cu", "yv", "ost",
];

/// A lowercase pseudo-word of 2 to 4 syllables.
pub fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(2..=4);
    (0..n).map(|_| *SYLLABLES.choose(rng).unwrap()).collect()
}

/// `n` distinct pseudo-words.
pub fn vocabulary(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    while out.len() < n {
        let w = pseudo_word(rng);
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

fn capitalize(word: &str) -> String {
    let mut c = word.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

/// Paper corpus. Titles are distinct word sets without repeated words;
/// references never point at the citing paper.
pub fn papers(n: usize, seed: u64) -> Vec<PaperRecord> {
    let mut rng = rng(seed);
    let vocab = vocabulary(&mut rng, 300);
    let keywords = vocabulary(&mut rng, 40);
    let authors = vocabulary(&mut rng, 120);
    let venues = ["NeurIPS", "ICML", "ICLR", "ACL", "CVPR", "Nature", "arXiv"];
    let fields = ["Computer Science", "Biology", "Physics", "Mathematics"];
    let mut titles = HashSet::new();
    let base = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
    let ids: Vec<String> = (0..n).map(|i| format!("p{i:05}")).collect();
    (0..n)
        .map(|i| {
            let title = loop {
                let len = rng.gen_range(3..=7);
                let words: Vec<&String> = vocab.choose_multiple(&mut rng, len).collect();
                let key: BTreeSet<&String> = words.iter().copied().collect();
                let key = key.into_iter().cloned().collect::<Vec<_>>().join(" ");
                if titles.insert(key) {
                    break words.iter().map(|w| capitalize(w)).collect::<Vec<_>>().join(" ");
                }
            };
            let abstract_len = rng.gen_range(10..30);
            let r#abstract = (0..abstract_len).map(|_| vocab.choose(&mut rng).unwrap().as_str()).collect::<Vec<_>>().join(" ");
            let n_refs = rng.gen_range(0..6);
            let references: Vec<String> = ids
                .choose_multiple(&mut rng, n_refs + 1)
                .filter(|r| **r != ids[i])
                .take(n_refs)
                .cloned()
                .collect();
            let n_kw = rng.gen_range(0..4);
            let n_authors = rng.gen_range(1..4);
            PaperRecord {
                id: ids[i].clone(),
                title,
                r#abstract,
                authors: authors.choose_multiple(&mut rng, n_authors).map(|a| capitalize(a)).collect(),
                field_of_study: fields.choose(&mut rng).unwrap().to_string(),
                publish_date: base + chrono::Days::new(rng.gen_range(0..8766)),
                venue: venues.choose(&mut rng).unwrap().to_string(),
                citation_count: rng.gen_range(0..5000),
                references,
                keywords: keywords.choose_multiple(&mut rng, n_kw).cloned().collect(),
            }
        })
        .collect()
}

const FILLER: [&str; 20] = [
    "a", "method", "that", "learns", "the", "structure", "of", "data", "with", "layers", "applied", "to", "images",
    "and", "text", "using", "simple", "operations", "in", "practice",
];

fn sentence(rng: &mut ChaCha8Rng, len: usize) -> Vec<String> {
    (0..len).map(|_| FILLER.choose(rng).unwrap().to_string()).collect()
}

/// A name, an optional full name, and a description mentioning them as
/// whole terms in assorted cases and punctuation. Names never occur inside
/// longer words, so a correct masking removes them completely.
/// `tag` is appended to the name to keep names unique within a dump.
pub fn mask_pair(rng: &mut ChaCha8Rng, tag: &str) -> (String, Option<String>, String) {
    let name_word = format!("{}{}{tag}", pseudo_word(rng), rng.gen_range(0..100));
    let name = match rng.gen_range(0..3) {
        0 => name_word.to_uppercase(),
        1 => capitalize(&name_word),
        _ => format!("{}-{}", capitalize(&name_word), rng.gen_range(1..10)),
    };
    let full_name = rng.gen_bool(0.6).then(|| {
        let n = rng.gen_range(2..4);
        let mut words: Vec<String> = (0..n).map(|_| capitalize(&format!("{}q", pseudo_word(rng)))).collect();
        words.push(tag.to_uppercase());
        words.join(" ")
    });
    let len = rng.gen_range(4..20);
    let mut words = sentence(rng, len);
    let plants = rng.gen_range(0..4);
    for _ in 0..plants {
        let term = match (&full_name, rng.gen_bool(0.5)) {
            (Some(full), true) => full.clone(),
            _ => name.clone(),
        };
        let term = match rng.gen_range(0..4) {
            0 => term.to_lowercase(),
            1 => term.to_uppercase(),
            _ => term,
        };
        let decorated = match rng.gen_range(0..5) {
            0 => format!("({term})"),
            1 => format!("{term},"),
            2 => format!("\"{term}\"."),
            3 => format!("{term}'s"),
            _ => term,
        };
        let at = rng.gen_range(0..=words.len());
        words.insert(at, decorated);
    }
    (name, full_name, words.join(" "))
}

fn url(rng: &mut ChaCha8Rng) -> String {
    let scheme = if rng.gen_bool(0.5) { "https" } else { "http" };
    format!("{scheme}://{}.org/{}/{}", pseudo_word(rng), pseudo_word(rng), rng.gen_range(1000..99999))
}

/// Text with URLs planted between words; returns the text and the number
/// of URLs planted.
pub fn text_with_urls(rng: &mut ChaCha8Rng) -> (String, usize) {
    let len = rng.gen_range(3..15);
    let mut words = sentence(rng, len);
    let n = rng.gen_range(0..4);
    for _ in 0..n {
        let u = url(rng);
        let decorated = match rng.gen_range(0..4) {
            0 => format!("({u})"),
            1 => format!("{u}."),
            2 => format!("[link]({u})"),
            _ => u,
        };
        let at = rng.gen_range(0..=words.len());
        words.insert(at, decorated);
    }
    (words.join(" "), n)
}

/// Method dump spread over a few areas and collections.
pub fn methods(n: usize, seed: u64) -> Vec<MethodRecord> {
    let mut rng = rng(seed);
    let areas = ["vision", "language", "graphs", "audio"];
    (0..n)
        .map(|i| {
            let (name, full_name, mut description) = mask_pair(&mut rng, &format!("m{i}"));
            description.push_str(&format!(" variant {i}."));
            if rng.gen_bool(0.3) {
                description.push_str(&format!(" Code: {}", url(&mut rng)));
            }
            let area = areas[i % areas.len()];
            MethodRecord {
                full_name,
                description: format!("{} {description}", name),
                introducing_paper_title: format!("On {} Learning {i}", capitalize(&pseudo_word(&mut rng))),
                collection_path: format!("{area}/general/c{}", (i / 4) % 7),
                area: area.to_string(),
                name,
            }
        })
        .collect()
}

pub fn datasets(n: usize, seed: u64) -> Vec<DatasetRecord> {
    let mut rng = rng(seed);
    let modalities = ["images", "text", "video", "tabular", "audio"];
    (0..n)
        .map(|i| {
            let (name, full_name, description) = mask_pair(&mut rng, &format!("d{i}"));
            DatasetRecord {
                full_name,
                description: format!("The {name} dataset {description} release {i}."),
                introducing_paper_title: format!("The {} Benchmark {i}", capitalize(&pseudo_word(&mut rng))),
                modality: modalities[i % modalities.len()].to_string(),
                name,
            }
        })
        .collect()
}

fn aspect_subset(rng: &mut ChaCha8Rng) -> BTreeSet<Aspect> {
    Aspect::ALL.iter().copied().filter(|_| rng.gen_bool(0.35)).collect()
}

/// Predictions and meta reviews for `n` papers.
pub fn review_pairs(n: usize, seed: u64) -> (Vec<ReviewPrediction>, Vec<MetaReview>) {
    let mut rng = rng(seed);
    let mut preds = Vec::new();
    let mut metas = Vec::new();
    for i in 0..n {
        let paper_id = format!("paper-{i:04}");
        metas.push(MetaReview {
            paper_id: paper_id.clone(),
            decision: if rng.gen_bool(0.4) { Decision::Accept } else { Decision::Reject },
            aspects: aspect_subset(&mut rng),
        });
        preds.push(ReviewPrediction {
            paper_id,
            recommendation: if rng.gen_bool(0.5) {
                Recommendation::AcceptLeaning
            } else {
                Recommendation::RejectLeaning
            },
            aspects: aspect_subset(&mut rng),
        });
    }
    preds.shuffle(&mut rng);
    (preds, metas)
}

pub fn eval_task(n: usize, seed: u64) -> EvalTask {
    let labels: Vec<String> = ["A", "B", "C", "D"].iter().map(|s| s.to_string()).collect();
    let mut rng = rng(seed);
    let subjects = ["algebra", "botany", "compilers"];
    let item = |i: usize, rng: &mut rand_chacha::ChaCha8Rng, subject: &str| QAItem {
        subject: subject.to_string(),
        question: format!("Synthetic question {i} about {subject}?"),
        options: Some((0..4).map(|k| format!("choice {i}.{k}")).collect()),
        context: None,
        gold: labels[rng.gen_range(0..4)].clone(),
    };
    let dev_pool = subjects
        .iter()
        .map(|s| (s.to_string(), (0..3).map(|i| item(100_000 + i, &mut rng, s)).collect()))
        .collect();
    let test_items = (0..n).map(|i| item(i, &mut rng, subjects[i % 3])).collect();
    EvalTask {
        name: "synthetic".into(),
        n_shots: 3,
        choice_labels: labels,
        subjects: subjects.iter().map(|s| s.to_string()).collect(),
        dev_pool,
        test_items,
        excluded: BTreeMap::new(),
        source_counts: BTreeMap::new(),
    }
}

/// Answers from a prompt-to-gold table built from the task itself.
pub fn eval_gold_table(task: &EvalTask) -> HashMap<String, String> {
    task.test_items
        .iter()
        .map(|i| (build_fewshot_prompt(task, &i.subject, i), format!(" {}", i.gold)))
        .collect()
}

pub fn all_verdicts(domain: &str, category: &str) -> Vec<CurationVerdict> {
    let mut out = Vec::new();
    for &quality in Quality::ALL {
        for &depth in Depth::ALL {
            for &suitability in Suitability::ALL {
                out.push(CurationVerdict {
                    quality,
                    domain: domain.into(),
                    depth,
                    category: category.into(),
                    suitability,
                });
            }
        }
    }
    out
}

/// Open-vocabulary domain and category pairs, listed and unlisted.
pub const OPEN_VALUES: [(&str, &str); 10] = [
    ("Computer Science", "Academic Article"),
    ("Natural Sciences", "Technical Blog"),
    ("Social Sciences", "News Report"),
    ("Engineering and Technology", "Whitepaper"),
    ("Medical and Health", "Monograph"),
    ("Arts and Literature", "Forum Discussion"),
    ("Other", "Other"),
    ("Promotional Content", "Promotional Content"),
    ("Law", "Lecture Notes"),
    ("Space Sciences", "Popular Science Article"),
];

/// Pseudo-words joined by mixed punctuation and line breaks.
pub fn random_text(rng: &mut rand_chacha::ChaCha8Rng, max_words: usize) -> String {
    let n = rng.gen_range(1..=max_words);
    let punct = [" ", " ", " ", ", ", "; ", ": ", "\n", " - "];
    let mut out = String::new();
    for i in 0..n {
        if i > 0 {
            out.push_str(punct[rng.gen_range(0..punct.len())]);
        }
        out.push_str(&pseudo_word(rng));
    }
    out
}
