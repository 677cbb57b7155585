//! Structured-answer extraction with fixed fallback defaults.

mod extract;
mod lenient;

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub use extract::extract_json_region;
pub use lenient::parse_json;

use crate::corpus::SocialTask;
use crate::geometry::Point2;
use crate::metrics::{DecodeTag, ParseStatus, PredictionRecord, PredictionTask};
use crate::prompting::CoordScale;

pub const FALLBACK_P_IO: f64 = 0.5;
pub const FALLBACK_POINT: Point2 = Point2::CENTER;
pub const FALLBACK_P_SG: f64 = 0.5;

const EXCERPT_CHARS: usize = 256;
/// Values whose magnitude exceeds this multiple of the scale are rejected.
const HARD_LIMIT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    NoJson,
    BadSchema,
    NonNumeric,
    OutOfRangeHard,
    EmptyText,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureReason::NoJson => "no_json",
            FailureReason::BadSchema => "bad_schema",
            FailureReason::NonNumeric => "non_numeric",
            FailureReason::OutOfRangeHard => "out_of_range_hard",
            FailureReason::EmptyText => "empty_text",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseOutcome {
    pub prediction: PredictionRecord,
    pub status: ParseStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_reason: Option<FailureReason>,
    pub raw_excerpt: String,
    /// Accepted only through a repair or the bare yes/no path.
    #[serde(default)]
    pub lenient: bool,
}

impl ParseOutcome {
    /// Attaches the sample identity to the parsed prediction.
    pub fn for_sample(mut self, sample_id: &str, tag: DecodeTag) -> Self {
        self.prediction.sample_id = sample_id.to_string();
        self.prediction.decode_tag = tag;
        self
    }

    pub fn log_entry(&self) -> ParseLogEntry {
        ParseLogEntry {
            sample_id: self.prediction.sample_id.clone(),
            task: self.prediction.task,
            sample_index: self.prediction.decode_tag.sample_index,
            status: self.status,
            failure_reason: self.failure_reason,
            lenient: self.lenient,
            values: ParsedValues {
                p_io: self.prediction.p_io,
                point: self.prediction.point,
                p_sg: self.prediction.p_sg,
            },
            raw_excerpt: self.raw_excerpt.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedValues {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_io: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Point2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_sg: Option<f64>,
}

/// One line of `parse_log.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseLogEntry {
    pub sample_id: String,
    pub task: PredictionTask,
    pub sample_index: u32,
    pub status: ParseStatus,
    pub failure_reason: Option<FailureReason>,
    pub lenient: bool,
    pub values: ParsedValues,
    pub raw_excerpt: String,
}

fn excerpt(s: &str) -> String {
    s.chars().take(EXCERPT_CHARS).collect()
}

fn record(
    task: PredictionTask,
    p_io: Option<f64>,
    point: Option<Point2>,
    p_sg: Option<f64>,
    status: ParseStatus,
) -> PredictionRecord {
    PredictionRecord {
        sample_id: String::new(),
        task,
        p_io,
        point,
        p_sg,
        parse_status: status,
        decode_tag: DecodeTag::default(),
    }
}

fn gaze_fallback(reason: FailureReason, raw: &str) -> ParseOutcome {
    ParseOutcome {
        prediction: record(
            PredictionTask::Gfo,
            Some(FALLBACK_P_IO),
            Some(FALLBACK_POINT),
            None,
            ParseStatus::Fallback,
        ),
        status: ParseStatus::Fallback,
        failure_reason: Some(reason),
        raw_excerpt: excerpt(raw),
        lenient: false,
    }
}

fn scalar_fallback(task: PredictionTask, reason: FailureReason, raw: &str) -> ParseOutcome {
    ParseOutcome {
        prediction: record(task, None, None, Some(FALLBACK_P_SG), ParseStatus::Fallback),
        status: ParseStatus::Fallback,
        failure_reason: Some(reason),
        raw_excerpt: excerpt(raw),
        lenient: false,
    }
}

/// The answer object: the value itself, or the first object in an array
/// that carries one of `keys`.
fn answer_object<'a>(v: &'a Value, keys: &[&str]) -> Option<&'a Map<String, Value>> {
    match v {
        Value::Object(m) => Some(m),
        Value::Array(items) => items
            .iter()
            .filter_map(Value::as_object)
            .find(|m| keys.iter().any(|k| m.contains_key(*k))),
        _ => None,
    }
}

/// A number in `[-limit, limit]`, before clamping.
fn number(v: &Value, limit: f64) -> Result<f64, FailureReason> {
    let x = match v {
        Value::Number(n) => n.as_f64().ok_or(FailureReason::NonNumeric)?,
        _ => return Err(FailureReason::NonNumeric),
    };
    if !x.is_finite() || x.abs() > limit {
        return Err(FailureReason::OutOfRangeHard);
    }
    Ok(x)
}

fn clamp_unit(x: f64) -> (f64, bool) {
    let c = x.clamp(0.0, 1.0);
    (c, c != x)
}

struct Located<'a> {
    value: Value,
    region: &'a str,
    lenient: bool,
}

fn locate(text: &str) -> Result<Located<'_>, (FailureReason, &str)> {
    if text.trim().is_empty() {
        return Err((FailureReason::EmptyText, text));
    }
    let region = extract_json_region(text).ok_or((FailureReason::NoJson, text))?;
    let (value, lenient) = parse_json(region).ok_or((FailureReason::BadSchema, region))?;
    Ok(Located {
        value,
        region,
        lenient,
    })
}

fn status_of(clamped: bool, lenient: bool) -> ParseStatus {
    if clamped || lenient {
        ParseStatus::Clamped
    } else {
        ParseStatus::Ok
    }
}

/// Parses a gaze answer. A record with both `inout` and `gaze_point` gives a
/// joint prediction; either key alone gives the matching partial record.
pub fn parse_gaze(text: &str, scale: CoordScale) -> ParseOutcome {
    let found = match locate(text) {
        Ok(f) => f,
        Err((reason, raw)) => return gaze_fallback(reason, raw),
    };
    let fail = |reason| gaze_fallback(reason, found.region);
    let Some(obj) = answer_object(&found.value, &["inout", "gaze_point"]) else {
        return fail(FailureReason::BadSchema);
    };
    let mut clamped = false;
    let p_io = match obj.get("inout") {
        None => None,
        Some(v) => match number(v, HARD_LIMIT) {
            Ok(x) => {
                let (c, k) = clamp_unit(x);
                clamped |= k;
                Some(c)
            }
            Err(r) => return fail(r),
        },
    };
    let point = match obj.get("gaze_point") {
        None => None,
        Some(Value::Array(xy)) if xy.len() == 2 => {
            let limit = HARD_LIMIT * scale.factor();
            let mut out = [0.0; 2];
            for (o, v) in out.iter_mut().zip(xy) {
                match number(v, limit) {
                    Ok(x) => *o = x / scale.factor(),
                    Err(r) => return fail(r),
                }
            }
            let (p, k) = Point2::clamped(out[0], out[1]);
            clamped |= k;
            Some(p)
        }
        Some(_) => return fail(FailureReason::BadSchema),
    };
    let task = match (p_io.is_some(), point.is_some()) {
        (true, true) => PredictionTask::Gfo,
        (true, false) => PredictionTask::GfoInout,
        (false, true) => PredictionTask::GfoPoint,
        (false, false) => return fail(FailureReason::BadSchema),
    };
    let status = status_of(clamped, found.lenient);
    ParseOutcome {
        prediction: record(task, p_io, point, None, status),
        status,
        failure_reason: None,
        raw_excerpt: excerpt(found.region),
        lenient: found.lenient,
    }
}

/// Parses a joint gaze answer; a record missing either field falls back.
pub fn parse_gaze_joint(text: &str, scale: CoordScale) -> ParseOutcome {
    let out = parse_gaze(text, scale);
    if out.status != ParseStatus::Fallback && out.prediction.task != PredictionTask::Gfo {
        return gaze_fallback(FailureReason::BadSchema, &out.raw_excerpt);
    }
    out
}

fn bare_yes_no(text: &str) -> Option<bool> {
    let t = text.trim();
    if t.chars().count() > 8 {
        return None;
    }
    let word: String = t
        .chars()
        .filter(|c| c.is_alphanumeric())
        .collect::<String>()
        .to_lowercase();
    match word.as_str() {
        "yes" => Some(true),
        "no" => Some(false),
        _ => None,
    }
}

/// Parses a social-gaze answer `{"label": p}`; a bare short "Yes"/"No" is
/// accepted and flagged as lenient.
pub fn parse_social(text: &str, task: SocialTask) -> ParseOutcome {
    let pt = PredictionTask::social(task);
    if text.trim().is_empty() {
        return scalar_fallback(pt, FailureReason::EmptyText, text);
    }
    if let Some(yes) = bare_yes_no(text) {
        return ParseOutcome {
            prediction: record(
                pt,
                None,
                None,
                Some(if yes { 1.0 } else { 0.0 }),
                ParseStatus::Ok,
            ),
            status: ParseStatus::Ok,
            failure_reason: None,
            raw_excerpt: excerpt(text.trim()),
            lenient: true,
        };
    }
    let found = match locate(text) {
        Ok(f) => f,
        Err((reason, raw)) => return scalar_fallback(pt, reason, raw),
    };
    let fail = |reason| scalar_fallback(pt, reason, found.region);
    let Some(v) = answer_object(&found.value, &["label"]).and_then(|o| o.get("label")) else {
        return fail(FailureReason::BadSchema);
    };
    let (p, clamped) = match number(v, HARD_LIMIT) {
        Ok(x) => clamp_unit(x),
        Err(r) => return fail(r),
    };
    let status = status_of(clamped, found.lenient);
    ParseOutcome {
        prediction: record(pt, None, None, Some(p), status),
        status,
        failure_reason: None,
        raw_excerpt: excerpt(found.region),
        lenient: found.lenient,
    }
}

/// First-token yes/no: `Some(true)`, `Some(false)`, or `None` when the first
/// word is neither.
pub fn parse_yesno(text: &str) -> Option<bool> {
    let first = text.split_whitespace().find_map(|tok| {
        let w: String = tok
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect::<String>()
            .to_lowercase();
        (!w.is_empty()).then_some(w)
    })?;
    match first.as_str() {
        "yes" => Some(true),
        "no" => Some(false),
        _ => None,
    }
}

/// Probe answer as an outcome: p = 1 for yes, 0 for no, fallback otherwise.
pub fn parse_probe(text: &str) -> ParseOutcome {
    match parse_yesno(text) {
        Some(yes) => ParseOutcome {
            prediction: record(
                PredictionTask::Probe,
                None,
                None,
                Some(if yes { 1.0 } else { 0.0 }),
                ParseStatus::Ok,
            ),
            status: ParseStatus::Ok,
            failure_reason: None,
            raw_excerpt: excerpt(text),
            lenient: false,
        },
        None => {
            let reason = if text.trim().is_empty() {
                FailureReason::EmptyText
            } else {
                FailureReason::NoJson
            };
            scalar_fallback(PredictionTask::Probe, reason, text)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_style_answer() {
        let o = parse_gaze(
            r#"[{"inout": 1.0, "gaze_point": [0.81, 0.24]}]"#,
            CoordScale::Unit,
        );
        assert_eq!(o.status, ParseStatus::Ok);
        assert_eq!(o.prediction.p_io, Some(1.0));
        assert_eq!(o.prediction.point, Some(Point2::new(0.81, 0.24)));
    }

    #[test]
    fn thousand_scale_divides() {
        let o = parse_gaze(
            r#"[{"inout": 1.0, "gaze_point": [810, 240]}]"#,
            CoordScale::Thousand,
        );
        assert_eq!(o.prediction.point, Some(Point2::new(0.81, 0.24)));
    }

    #[test]
    fn clamping_marks_status() {
        let o = parse_gaze(
            r#"[{"inout": 1.4, "gaze_point": [0.2, -0.1]}]"#,
            CoordScale::Unit,
        );
        assert_eq!(o.status, ParseStatus::Clamped);
        assert_eq!(o.prediction.p_io, Some(1.0));
        assert_eq!(o.prediction.point, Some(Point2::new(0.2, 0.0)));
    }

    #[test]
    fn prose_falls_back() {
        let o = parse_gaze("The person is looking left.", CoordScale::Unit);
        assert_eq!(o.failure_reason, Some(FailureReason::NoJson));
        assert_eq!(o.prediction.p_io, Some(0.5));
        assert_eq!(o.prediction.point, Some(Point2::new(0.5, 0.5)));
    }

    #[test]
    fn social_paths() {
        assert_eq!(
            parse_social(r#"[{"label": 1}]"#, SocialTask::LAEO)
                .prediction
                .p_sg,
            Some(1.0)
        );
        let e = parse_social("", SocialTask::LAH);
        assert_eq!(e.failure_reason, Some(FailureReason::EmptyText));
        assert_eq!(e.prediction.p_sg, Some(0.5));
        let n = parse_social("no", SocialTask::SA);
        assert_eq!(
            (n.prediction.p_sg, n.status, n.lenient),
            (Some(0.0), ParseStatus::Ok, true)
        );
    }

    #[test]
    fn yes_no_first_token() {
        assert_eq!(parse_yesno("Yes."), Some(true));
        assert_eq!(parse_yesno("No, there is no head."), Some(false));
        assert_eq!(parse_yesno("Unclear."), None);
    }
}
