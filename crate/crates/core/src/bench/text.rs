use std::sync::OnceLock;

use regex::Regex;

pub const MASK: &str = "()";

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)https?://[^\s)\]>}]*").expect("static regex"))
}

fn spaces_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[ \t]{2,}").expect("static regex"))
}

/// Remove every http(s) URL. A URL runs to the next whitespace or closing
/// bracket; trailing sentence punctuation stays in the text. Space runs
/// left behind are collapsed.
pub fn strip_links(text: &str) -> String {
    if !url_re().is_match(text) {
        return text.to_string();
    }
    let stripped = url_re().replace_all(text, |caps: &regex::Captures| {
        let url = &caps[0];
        let body = url.trim_end_matches(['.', ',', ';', ':', '!', '?', '\'', '"']);
        url[body.len()..].to_string()
    });
    spaces_re().replace_all(&stripped, " ").trim().to_string()
}

fn same_char(a: char, b: char) -> bool {
    a == b || a.to_lowercase().eq(b.to_lowercase())
}

/// Replace whole-term, case-insensitive occurrences of `term` with `()`.
///
/// A match may not start or end inside a longer alphanumeric token.
fn replace_term(text: &str, term: &str) -> String {
    let term: Vec<char> = term.chars().collect();
    let chars: Vec<char> = text.chars().collect();
    let (Some(&first), Some(&last)) = (term.first(), term.last()) else {
        return text.to_string();
    };
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        let end = i + term.len();
        let fits = end <= chars.len() && chars[i..end].iter().zip(&term).all(|(a, b)| same_char(*a, *b));
        let left_ok = i == 0 || !(chars[i - 1].is_alphanumeric() && first.is_alphanumeric());
        let right_ok = end >= chars.len() || !(chars[end].is_alphanumeric() && last.is_alphanumeric());
        if fits && left_ok && right_ok {
            out.push_str(MASK);
            i = end;
        } else {
            out.push(chars[i]);
            i += 1;
        }
    }
    out
}

/// Hide a concept's own name inside its description: `full_name` first,
/// then `name`, each whole-term occurrence replaced by `()`.
pub fn mask_description(description: &str, name: &str, full_name: Option<&str>) -> String {
    let mut text = description.to_string();
    if let Some(full) = full_name.map(str::trim).filter(|f| !f.is_empty()) {
        text = replace_term(&text, full);
    }
    let name = name.trim();
    if !name.is_empty() {
        text = replace_term(&text, name);
    }
    text
}
