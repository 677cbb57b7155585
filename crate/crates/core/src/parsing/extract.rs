use std::sync::OnceLock;

use regex::Regex;

use super::lenient::parse_json;

const MARKERS: [&str; 2] = ["### Gaze Point ###", "### Social Gaze Label ###"];
const MAX_CANDIDATES: usize = 64;

fn fenced_json() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?s)```[ \t]*json[ \t]*\r?\n(.*?)```").unwrap())
}

fn last_fenced(text: &str) -> Option<&str> {
    fenced_json()
        .captures_iter(text)
        .last()
        .and_then(|c| c.get(1))
        .map(|m| m.as_str())
}

/// Top-level bracket-balanced regions, in order, skipping brackets inside
/// double-quoted strings.
fn balanced_regions(text: &str) -> Vec<(usize, usize)> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut stack: Vec<u8> = Vec::new();
    let mut start = 0;
    let mut in_str = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate() {
        if in_str {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_str = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' if !stack.is_empty() => in_str = true,
            b'[' | b'{' => {
                if stack.is_empty() {
                    start = i;
                }
                stack.push(b);
            }
            b']' | b'}' => {
                let open = if b == b']' { b'[' } else { b'{' };
                match stack.last() {
                    Some(&top) if top == open => {
                        stack.pop();
                        if stack.is_empty() {
                            out.push((start, i + 1));
                        }
                    }
                    // Mismatched closer: drop the partial region.
                    _ => stack.clear(),
                }
            }
            _ => {}
        }
    }
    out
}

/// Locates the answer JSON in model output. Search order: the last
/// ```json block after the last answer heading, then the last ```json block
/// anywhere, then the last bracket-balanced region that parses as JSON.
pub fn extract_json_region(text: &str) -> Option<&str> {
    let marker_pos = MARKERS
        .iter()
        .filter_map(|m| text.rfind(m).map(|p| p + m.len()))
        .max();
    if let Some(p) = marker_pos {
        if let Some(block) = last_fenced(&text[p..]) {
            return Some(block.trim());
        }
    }
    if let Some(block) = last_fenced(text) {
        return Some(block.trim());
    }
    balanced_regions(text)
        .into_iter()
        .rev()
        .take(MAX_CANDIDATES)
        .map(|(s, e)| &text[s..e])
        .find(|c| parse_json(c).is_some())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefers_block_after_heading() {
        let t = "```json\n[1]\n```\n### Gaze Point ###\n```json\n[2]\n```\nthen ```json\n[3]\n```";
        assert_eq!(extract_json_region(t), Some("[3]"));
        let t = "### Gaze Point ###\n```json\n[2]\n```\n";
        assert_eq!(extract_json_region(t), Some("[2]"));
    }

    #[test]
    fn falls_back_to_balanced_region() {
        let t = "answer: {\"label\": 1} done [oops";
        assert_eq!(extract_json_region(t), Some("{\"label\": 1}"));
        assert_eq!(extract_json_region("no brackets at all"), None);
    }

    #[test]
    fn brackets_in_strings_are_ignored() {
        let t = r#"x {"a": "]"} y"#;
        assert_eq!(extract_json_region(t), Some(r#"{"a": "]"}"#));
    }
}
