use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// One tool invocation emitted by the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionBlob {
    pub action: String,
    pub action_input: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BlobError {
    #[error("multiple actions: the blob must be a single JSON object, not a list")]
    MultipleActions,
    #[error("not valid JSON: {0}")]
    NotJson(String),
    #[error("blob is not a JSON object")]
    NotObject,
    #[error("missing key {0:?}")]
    MissingKey(&'static str),
    #[error("unexpected top-level key {0:?}")]
    ExtraKey(String),
    #[error("\"action\" must be a non-empty string")]
    BadAction,
    #[error("\"action_input\" must be a JSON object")]
    InputNotObject,
}

/// Result of reading one model turn.
#[derive(Debug, Clone, PartialEq)]
pub enum ParsedStep {
    Action { thought: String, blob: ActionBlob },
    FinalAnswer(String),
    Malformed(String),
}

const FENCES: [&str; 2] = ["```", "'''"];
const FINAL_ANSWER: &str = "Final Answer:";

/// Byte ranges of fenced regions (``` or ''' delimited), fences included.
/// An unterminated fence runs to the end of the text.
fn fenced_regions(text: &str) -> Vec<(usize, usize)> {
    let mut regions = Vec::new();
    let mut pos = 0;
    while pos < text.len() {
        let next = FENCES
            .iter()
            .filter_map(|f| text[pos..].find(f).map(|i| (pos + i, *f)))
            .min_by_key(|(i, _)| *i);
        let Some((start, fence)) = next else { break };
        let after = start + fence.len();
        let end = text[after..].find(fence).map(|i| after + i + fence.len()).unwrap_or(text.len());
        regions.push((start, end));
        pos = end;
    }
    regions
}

fn find_outside(text: &str, needle: &str, regions: &[(usize, usize)]) -> Option<usize> {
    text.match_indices(needle)
        .map(|(i, _)| i)
        .find(|i| !regions.iter().any(|(s, e)| i >= s && i < e))
}

/// End (exclusive) of the balanced `{...}` or `[...]` starting at `start`,
/// skipping over string literals in either quote style.
fn balanced_end(text: &str, start: usize) -> Option<usize> {
    let bytes = text.as_bytes();
    let mut depth = 0i32;
    let mut quote: Option<u8> = None;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == q {
                quote = None;
            }
            continue;
        }
        match b {
            b'"' | b'\'' => quote = Some(b),
            b'{' | b'[' => depth += 1,
            b'}' | b']' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

/// Locate the candidate blob text after `Action:`.
fn action_region(rest: &str) -> Option<&str> {
    let trimmed = rest.trim_start();
    let offset = rest.len() - trimmed.len();
    for fence in FENCES {
        if let Some(body) = trimmed.strip_prefix(fence) {
            let end = body.find(fence).unwrap_or(body.len());
            return Some(&rest[offset..offset + fence.len() + end + if end < body.len() { fence.len() } else { 0 }]);
        }
    }
    let start = rest.find(['{', '['])?;
    let end = balanced_end(rest, start).unwrap_or(rest.len());
    Some(&rest[start..end])
}

/// Split one model completion into a tool call, a final answer, or a
/// recoverable malformed step.
pub fn parse_model_output(text: &str) -> ParsedStep {
    let regions = fenced_regions(text);
    if let Some(pos) = find_outside(text, FINAL_ANSWER, &regions) {
        return ParsedStep::FinalAnswer(text[pos + FINAL_ANSWER.len()..].trim().to_string());
    }
    let Some(action_pos) = find_outside(text, "Action:", &regions) else {
        return ParsedStep::Malformed("expected \"Action:\" followed by a JSON blob, or \"Final Answer:\"".into());
    };
    let before = &text[..action_pos];
    let thought = match before.find("Thought:") {
        Some(t) => before[t + "Thought:".len()..].trim(),
        None => before.trim(),
    };
    let Some(region) = action_region(&text[action_pos + "Action:".len()..]) else {
        return ParsedStep::Malformed("no JSON blob after \"Action:\"".into());
    };
    match parse_action_blob(region) {
        Ok(blob) => ParsedStep::Action {
            thought: thought.to_string(),
            blob,
        },
        Err(e) => ParsedStep::Malformed(e.to_string()),
    }
}

fn strip_fences(text: &str) -> &str {
    let mut s = text.trim();
    for fence in FENCES {
        if let Some(body) = s.strip_prefix(fence) {
            // Drop an info string such as `json` on the opening line.
            let body = match body.find('\n') {
                Some(nl) if body[..nl].trim().chars().all(|c| c.is_ascii_alphanumeric()) => &body[nl + 1..],
                _ => body,
            };
            s = body.trim_end();
            s = s.strip_suffix(fence).unwrap_or(s).trim();
            break;
        }
    }
    s
}

/// Rewrite single-quoted strings and bare object keys into strict JSON.
///
/// Double-quoted strings pass through untouched, so apostrophes inside
/// them survive.
pub fn normalize_quotes(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len() + 8);
    let mut i = 0;
    let mut last_sig: Option<char> = None;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '"' => {
                out.push('"');
                i += 1;
                while i < chars.len() {
                    let d = chars[i];
                    out.push(d);
                    i += 1;
                    if d == '\\' && i < chars.len() {
                        out.push(chars[i]);
                        i += 1;
                    } else if d == '"' {
                        break;
                    }
                }
                last_sig = Some('"');
            }
            '\'' => {
                out.push('"');
                i += 1;
                while i < chars.len() {
                    let d = chars[i];
                    i += 1;
                    match d {
                        '\\' if i < chars.len() && chars[i] == '\'' => {
                            out.push('\'');
                            i += 1;
                        }
                        '\\' if i < chars.len() => {
                            out.push('\\');
                            out.push(chars[i]);
                            i += 1;
                        }
                        '"' => out.push_str("\\\""),
                        '\'' => break,
                        other => out.push(other),
                    }
                }
                out.push('"');
                last_sig = Some('"');
            }
            c if (c.is_alphabetic() || c == '_' || c == '$') && matches!(last_sig, Some('{') | Some(',')) => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '$') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let mut j = i;
                while j < chars.len() && chars[j].is_whitespace() {
                    j += 1;
                }
                if j < chars.len() && chars[j] == ':' {
                    out.push('"');
                    out.push_str(&word);
                    out.push('"');
                } else {
                    out.push_str(&word);
                }
                last_sig = Some('w');
            }
            c => {
                out.push(c);
                if !c.is_whitespace() {
                    last_sig = Some(c);
                }
                i += 1;
            }
        }
    }
    out
}

/// Parse and validate a candidate action blob.
///
/// Code fences are stripped and single-quoted pseudo-JSON is normalized
/// before parsing. The object must hold exactly `action` (string) and
/// `action_input` (object).
pub fn parse_action_blob(text: &str) -> Result<ActionBlob, BlobError> {
    let body = strip_fences(text);
    if body.starts_with('[') {
        return Err(BlobError::MultipleActions);
    }
    let value: Value = match serde_json::from_str(body) {
        Ok(v) => v,
        Err(first) => serde_json::from_str(&normalize_quotes(body)).map_err(|_| BlobError::NotJson(first.to_string()))?,
    };
    let obj = match value {
        Value::Object(obj) => obj,
        Value::Array(_) => return Err(BlobError::MultipleActions),
        _ => return Err(BlobError::NotObject),
    };
    if let Some(extra) = obj.keys().find(|k| *k != "action" && *k != "action_input") {
        return Err(BlobError::ExtraKey(extra.clone()));
    }
    let action = match obj.get("action") {
        None => return Err(BlobError::MissingKey("action")),
        Some(Value::String(s)) if !s.trim().is_empty() => s.trim().to_string(),
        Some(_) => return Err(BlobError::BadAction),
    };
    let action_input = match obj.get("action_input") {
        None => return Err(BlobError::MissingKey("action_input")),
        Some(Value::Object(input)) => input.clone(),
        Some(_) => return Err(BlobError::InputNotObject),
    };
    Ok(ActionBlob { action, action_input })
}
