use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::Record;
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::prompting::CoordScale;
use crate::seed::rng_from;

/// Scripted answer policy for offline runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MockBehavior {
    /// Ground truth: mean gaze point, true in/out, true label, correct yes/no.
    EchoGt,
    /// Ground-truth point shifted by `(dx, dy)`.
    FixedOffset { dx: f64, dy: f64 },
    /// Prose with no JSON.
    Malformed,
    /// A refusal sentence.
    Refuse,
    /// Social label `p` regardless of truth; other tasks echo the truth.
    BiasedSg { p: f64 },
    /// "Yes" to every probe and label 1 to every social query.
    AlwaysYes,
    /// Ground-truth point plus seeded Gaussian noise of std `sigma` per sample.
    Jitter { sigma: f64 },
}

impl fmt::Display for MockBehavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MockBehavior::EchoGt => write!(f, "echo_gt"),
            MockBehavior::FixedOffset { dx, dy } => write!(f, "fixed_offset({dx},{dy})"),
            MockBehavior::Malformed => write!(f, "malformed"),
            MockBehavior::Refuse => write!(f, "refuse"),
            MockBehavior::BiasedSg { p } => write!(f, "biased_sg({p})"),
            MockBehavior::AlwaysYes => write!(f, "always_yes"),
            MockBehavior::Jitter { sigma } => write!(f, "jitter({sigma})"),
        }
    }
}

impl FromStr for MockBehavior {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidInput(format!("unknown mock behavior `{s}`"));
        let (name, args) = match s.find('(') {
            Some(i) => {
                let inner = s[i + 1..].strip_suffix(')').ok_or_else(bad)?;
                let args = inner
                    .split(',')
                    .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
                    .collect::<Result<Vec<_>>>()?;
                (&s[..i], args)
            }
            None => (s, Vec::new()),
        };
        match (name, args.as_slice()) {
            ("echo_gt" | "oracle", []) => Ok(MockBehavior::EchoGt),
            ("fixed_offset", [dx, dy]) => Ok(MockBehavior::FixedOffset { dx: *dx, dy: *dy }),
            ("malformed", []) => Ok(MockBehavior::Malformed),
            ("refuse", []) => Ok(MockBehavior::Refuse),
            ("biased_sg", [p]) if (0.0..=1.0).contains(p) => Ok(MockBehavior::BiasedSg { p: *p }),
            ("always_yes", []) => Ok(MockBehavior::AlwaysYes),
            ("jitter", [sigma]) if *sigma >= 0.0 => Ok(MockBehavior::Jitter { sigma: *sigma }),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for MockBehavior {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MockBehavior> for String {
    fn from(b: MockBehavior) -> String {
        b.to_string()
    }
}

/// What the mock knows about one sample.
#[derive(Debug, Clone, PartialEq)]
pub enum Truth {
    Gaze { points: Vec<Point2>, inside: bool },
    Social { label: bool },
    Probe { is_positive: bool },
}

/// Ground truth keyed by sample id.
#[derive(Debug, Clone, Default)]
pub struct TruthOracle {
    items: HashMap<String, Truth>,
}

impl TruthOracle {
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a Record>) -> Self {
        let items = records
            .into_iter()
            .map(|r| {
                let truth = match r {
                    Record::Gaze(s) => Truth::Gaze {
                        points: s.gaze_points.clone(),
                        inside: s.inout_label.unwrap_or(true),
                    },
                    Record::Social(p) => Truth::Social { label: p.label },
                    Record::Probe(p) => Truth::Probe {
                        is_positive: p.is_positive,
                    },
                };
                (r.id().to_string(), truth)
            })
            .collect();
        TruthOracle { items }
    }

    pub fn get(&self, sample_id: &str) -> Result<&Truth> {
        self.items
            .get(sample_id)
            .ok_or_else(|| Error::UnknownSample(sample_id.to_string()))
    }
}

const MALFORMED: &str =
    "The person seems to be looking somewhere to the left, probably at another person.";
const REFUSAL: &str = "I cannot determine this.";

fn num(v: f64, scale: CoordScale) -> String {
    format!("{:?}", v * scale.factor())
}

fn gaze_answer(inout: f64, p: Point2, scale: CoordScale) -> String {
    format!(
        "### Reasoning ###\nScripted answer.\n\n### Gaze Point ###\n```json\n[\n{{\"inout\": {:?}, \"gaze_point\": [{}, {}]}}\n]\n```",
        inout,
        num(p.x, scale),
        num(p.y, scale)
    )
}

fn social_answer(p: f64) -> String {
    format!("### Reasoning ###\nScripted answer.\n\n### Social Gaze Label ###\n```json\n[\n{{\"label\": {p:?}}}\n]\n```")
}

/// Deterministic scripted completion for one sample. `seed` and
/// `sample_index` only matter for stochastic behaviors.
pub fn mock_complete(
    oracle: &TruthOracle,
    sample_id: &str,
    behavior: MockBehavior,
    scale: CoordScale,
    seed: u64,
    sample_index: u32,
) -> Result<String> {
    let truth = oracle.get(sample_id)?;
    match behavior {
        MockBehavior::Malformed => return Ok(MALFORMED.to_string()),
        MockBehavior::Refuse => return Ok(REFUSAL.to_string()),
        _ => {}
    }
    Ok(match truth {
        Truth::Gaze { points, inside } => {
            let gt = Point2::mean(points).unwrap_or(Point2::CENTER);
            let p = match behavior {
                MockBehavior::FixedOffset { dx, dy } => Point2::new(gt.x + dx, gt.y + dy),
                MockBehavior::Jitter { sigma } if sigma > 0.0 => {
                    let mut rng =
                        rng_from(seed, &["mock-jitter", sample_id, &sample_index.to_string()]);
                    let n = Normal::new(0.0, sigma).expect("finite sigma");
                    Point2::new(gt.x + n.sample(&mut rng), gt.y + n.sample(&mut rng))
                }
                _ => gt,
            };
            gaze_answer(if *inside { 1.0 } else { 0.0 }, p, scale)
        }
        Truth::Social { label } => match behavior {
            MockBehavior::BiasedSg { p } => social_answer(p),
            MockBehavior::AlwaysYes => social_answer(1.0),
            _ => social_answer(if *label { 1.0 } else { 0.0 }),
        },
        Truth::Probe { is_positive } => {
            let yes = matches!(behavior, MockBehavior::AlwaysYes) || *is_positive;
            if yes { "Yes." } else { "No." }.to_string()
        }
    })
}
