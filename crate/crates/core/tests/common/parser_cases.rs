//! Parser fixture cases and random-string fuzzing.

use gazebench_core::corpus::SocialTask;
use gazebench_core::metrics::ParseStatus;
use gazebench_core::parsing::{
    parse_gaze, parse_gaze_joint, parse_probe, parse_social, parse_yesno, ParseOutcome,
    FALLBACK_P_SG,
};
use gazebench_core::prompting::CoordScale;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

const TOL: f64 = 1e-12;

#[derive(Deserialize)]
struct Case {
    name: String,
    parser: String,
    scale: CoordScale,
    text: String,
    expect: Expect,
}

#[derive(Deserialize)]
struct Expect {
    status: Option<ParseStatus>,
    reason: Option<String>,
    p_io: Option<f64>,
    point: Option<[f64; 2]>,
    p_sg: Option<f64>,
    lenient: Option<bool>,
    answer: Option<bool>,
}

fn cases() -> Vec<Case> {
    let path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/fixtures/parser/cases.json"
    );
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn run(case: &Case) -> ParseOutcome {
    match case.parser.as_str() {
        "gaze_joint" => parse_gaze_joint(&case.text, case.scale),
        "gaze" => parse_gaze(&case.text, case.scale),
        "social" => parse_social(&case.text, SocialTask::LAEO),
        other => panic!("unknown parser {other}"),
    }
}

fn close(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => (a - b).abs() <= TOL,
        (None, None) => true,
        _ => false,
    }
}

/// Checks every fixture and returns the number checked.
pub fn check_fixtures() -> usize {
    let all = cases();
    for c in &all {
        if c.parser == "probe" {
            assert_eq!(parse_yesno(&c.text), c.expect.answer, "{}", c.name);
            let out = parse_probe(&c.text);
            let expected = c
                .expect
                .answer
                .map_or(FALLBACK_P_SG, |y| if y { 1.0 } else { 0.0 });
            assert_eq!(out.prediction.p_sg, Some(expected), "{}", c.name);
            continue;
        }
        let out = run(c);
        let e = &c.expect;
        assert_eq!(Some(out.status), e.status, "{}: status", c.name);
        assert_eq!(
            out.failure_reason.map(|r| r.to_string()),
            e.reason,
            "{}: reason",
            c.name
        );
        let p = &out.prediction;
        assert!(close(p.p_io, e.p_io), "{}: p_io {:?}", c.name, p.p_io);
        assert!(close(p.p_sg, e.p_sg), "{}: p_sg {:?}", c.name, p.p_sg);
        let point = p.point.map(|q| [q.x, q.y]);
        match (point, e.point) {
            (Some(a), Some(b)) => assert!(
                (a[0] - b[0]).abs() <= TOL && (a[1] - b[1]).abs() <= TOL,
                "{}: point {a:?}",
                c.name
            ),
            (a, b) => assert_eq!(a, b, "{}: point", c.name),
        }
        if let Some(l) = e.lenient {
            assert_eq!(out.lenient, l, "{}: lenient", c.name);
        }
    }
    all.len()
}

const ALPHABET: &[&str] = &[
    "{",
    "}",
    "[",
    "]",
    "\"",
    "'",
    ":",
    ",",
    " ",
    "\n",
    "```",
    "```json",
    "### Gaze Point ###",
    "### Social Gaze Label ###",
    "inout",
    "gaze_point",
    "label",
    "0.5",
    "1e309",
    "-3",
    "NaN",
    "yes",
    "No",
    "\\",
    "é",
    "🙂",
    "null",
    "true",
    "12345678901234567890",
    ".",
];

fn random_text(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(0..40);
    let mut s = String::new();
    for _ in 0..n {
        if rng.random_bool(0.2) {
            s.push(char::from_u32(rng.random_range(0..0x3000)).unwrap_or('?'));
        } else {
            s.push_str(ALPHABET[rng.random_range(0..ALPHABET.len())]);
        }
    }
    s
}

pub fn assert_sane(out: &ParseOutcome) {
    let p = &out.prediction;
    for v in [p.p_io, p.p_sg].into_iter().flatten() {
        assert!((0.0..=1.0).contains(&v));
    }
    if let Some(q) = p.point {
        assert!(q.is_unit());
    }
    assert_eq!(
        out.failure_reason.is_some(),
        out.status == ParseStatus::Fallback
    );
}

/// Runs all parsers on `n` random strings; returns how many were parsed.
pub fn fuzz(n: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n {
        let text = random_text(&mut rng);
        assert_sane(&parse_gaze_joint(&text, CoordScale::Unit));
        assert_sane(&parse_gaze(&text, CoordScale::Thousand));
        assert_sane(&parse_social(&text, SocialTask::LAH));
        assert_sane(&parse_probe(&text));
    }
    n
}
