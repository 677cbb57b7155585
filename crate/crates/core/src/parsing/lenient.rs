use serde_json::Value;

/// Parses strict JSON, or failing that a repaired form with trailing commas
/// removed and single-quoted strings converted. Returns the value and whether
/// the repair was needed.
pub fn parse_json(text: &str) -> Option<(Value, bool)> {
    if let Ok(v) = serde_json::from_str::<Value>(text) {
        return Some((v, false));
    }
    let repaired = repair(text)?;
    serde_json::from_str::<Value>(&repaired)
        .ok()
        .map(|v| (v, true))
}

fn repair(text: &str) -> Option<String> {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    let mut changed = false;
    while let Some(c) = chars.next() {
        match c {
            '"' => {
                out.push(c);
                let mut escaped = false;
                for d in chars.by_ref() {
                    out.push(d);
                    if escaped {
                        escaped = false;
                    } else if d == '\\' {
                        escaped = true;
                    } else if d == '"' {
                        break;
                    }
                }
            }
            '\'' => {
                changed = true;
                out.push('"');
                let mut escaped = false;
                for d in chars.by_ref() {
                    if escaped {
                        escaped = false;
                        if d == '\'' {
                            out.pop();
                        }
                        out.push(d);
                    } else if d == '\\' {
                        escaped = true;
                        out.push(d);
                    } else if d == '\'' {
                        break;
                    } else if d == '"' {
                        out.push_str("\\\"");
                    } else {
                        out.push(d);
                    }
                }
                out.push('"');
            }
            ',' => {
                let mut ahead = chars.clone();
                while ahead.peek().is_some_and(|n| n.is_whitespace()) {
                    ahead.next();
                }
                if matches!(ahead.peek(), Some(']') | Some('}')) {
                    changed = true;
                } else {
                    out.push(c);
                }
            }
            _ => out.push(c),
        }
    }
    changed.then_some(out)
}
