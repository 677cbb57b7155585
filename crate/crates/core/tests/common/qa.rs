//! QA-pair round trips and per-epoch question redraws.

use gazebench_core::corpus::Record;
use gazebench_core::parsing::{parse_gaze, parse_social};
use gazebench_core::prompting::{
    build_gaze_qa, build_social_qa, sft_lines, CoordScale, QAPair, QueryKind, SftFormat,
};
use gazebench_core::HeadBox;
use regex::Regex;
use serde_json::Value;

/// Largest coordinate error introduced by integer rendering at the thousand scale.
pub const ROUNDING_BOUND: f64 = 0.0005 + 1e-12;

fn numbers(re: &Regex, text: &str) -> Vec<f64> {
    re.find_iter(text)
        .map(|m| m.as_str().parse().unwrap())
        .collect()
}

/// Every bracketed box in a question, back in unit coordinates.
fn boxes_in(re: &Regex, q: &str, scale: CoordScale) -> Vec<HeadBox> {
    q.split('[')
        .skip(1)
        .map(|chunk| {
            let inner = &chunk[..chunk.find(']').unwrap()];
            let v: Vec<f64> = numbers(re, inner)
                .iter()
                .map(|x| x / scale.factor())
                .collect();
            assert_eq!(v.len(), 4, "{q}");
            HeadBox::new(v[0], v[1], v[2], v[3]).unwrap()
        })
        .collect()
}

fn close_box(a: &HeadBox, b: &HeadBox) -> bool {
    (a.x_min() - b.x_min()).abs() <= ROUNDING_BOUND
        && (a.y_min() - b.y_min()).abs() <= ROUNDING_BOUND
        && (a.x_max() - b.x_max()).abs() <= ROUNDING_BOUND
        && (a.y_max() - b.y_max()).abs() <= ROUNDING_BOUND
}

/// Builds thousand-scale QA pairs for every record and checks that boxes,
/// labels and points parse back from the text. Returns the pair count.
pub fn round_trip(records: &[Record]) -> usize {
    let num = Regex::new(r"-?\d+(\.\d+)?").unwrap();
    let scale = CoordScale::Thousand;
    let mut checked = 0;
    for (i, r) in records.iter().enumerate() {
        let seed = i as u64;
        match r {
            Record::Gaze(g) => {
                for pair in build_gaze_qa(g, seed, scale).unwrap() {
                    checked += 1;
                    let found = boxes_in(&num, &pair.question, scale);
                    assert!(!found.is_empty() && found.iter().all(|b| close_box(b, &g.head)));
                    let parsed = parse_gaze(&pair.answer, scale).prediction;
                    match pair.query_kind {
                        QueryKind::Inout => assert_eq!(parsed.p_io, Some(1.0)),
                        QueryKind::GazePoint => {
                            let (p, t) = (parsed.point.unwrap(), g.gaze_points[0]);
                            assert!(
                                (p.x - t.x).abs() <= ROUNDING_BOUND
                                    && (p.y - t.y).abs() <= ROUNDING_BOUND
                            );
                        }
                        other => panic!("unexpected {other}"),
                    }
                }
            }
            Record::Social(s) => {
                let pair = build_social_qa(s, QueryKind::social(s.task), seed, scale).unwrap();
                checked += 1;
                let want = if s.label { 1.0 } else { 0.0 };
                assert_eq!(
                    parse_social(&pair.answer, s.task).prediction.p_sg,
                    Some(want)
                );
                let found = boxes_in(&num, &pair.question, scale);
                assert!(found.len() >= 2, "{}", pair.question);
                assert!(found
                    .iter()
                    .all(|b| close_box(b, &s.head_a) || close_box(b, &s.head_b)));
                assert!(found.iter().any(|b| close_box(b, &s.head_a)));
                assert!(found.iter().any(|b| close_box(b, &s.head_b)));
            }
            Record::Probe(_) => unreachable!(),
        }
    }
    checked
}

/// One QA pair per record, at most `n`.
pub fn one_pair_each(records: &[Record], n: usize) -> Vec<QAPair> {
    let mut pairs = Vec::new();
    for r in records {
        match r {
            Record::Gaze(g) => pairs.push(
                build_gaze_qa(g, 1, CoordScale::Unit)
                    .unwrap()
                    .pop()
                    .unwrap(),
            ),
            Record::Social(s) => pairs
                .push(build_social_qa(s, QueryKind::social(s.task), 1, CoordScale::Unit).unwrap()),
            Record::Probe(_) => {}
        }
    }
    pairs.truncate(n);
    pairs
}

/// Exports two epochs and counts pairs whose question text differs between them.
pub fn epoch_changes(pairs: &[QAPair], seed: u64) -> usize {
    let lines = sft_lines(pairs, 2, seed, SftFormat::Plain).unwrap();
    assert_eq!(lines.len(), 2 * pairs.len());
    assert_eq!(lines, sft_lines(pairs, 2, seed, SftFormat::Plain).unwrap());
    let question = |l: &String| -> String {
        let v: Value = serde_json::from_str(l).unwrap();
        v["messages"][0]["content"].as_str().unwrap().to_string()
    };
    let n = pairs.len();
    (0..n)
        .filter(|&i| question(&lines[i]) != question(&lines[n + i]))
        .count()
}
