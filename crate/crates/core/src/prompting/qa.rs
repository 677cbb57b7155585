use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::coords::{format_box, format_point, CoordScale};
use super::render::{Message, Part, Role};
use crate::corpus::{DatasetId, GazeSample, SocialPair, SocialTask};
use crate::error::{Error, Result};
use crate::geometry::HeadBox;
use crate::seed::{derive_seed, rng_from};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    Inout,
    GazePoint,
    Laeo,
    Lah,
    Sa,
}

impl QueryKind {
    pub fn social(task: SocialTask) -> Self {
        match task {
            SocialTask::LAEO => QueryKind::Laeo,
            SocialTask::LAH => QueryKind::Lah,
            SocialTask::SA => QueryKind::Sa,
        }
    }

    pub fn is_gaze(self) -> bool {
        matches!(self, QueryKind::Inout | QueryKind::GazePoint)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QueryKind::Inout => "inout",
            QueryKind::GazePoint => "gaze_point",
            QueryKind::Laeo => "laeo",
            QueryKind::Lah => "lah",
            QueryKind::Sa => "sa",
        }
    }
}

impl fmt::Display for QueryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QueryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "inout" => Ok(QueryKind::Inout),
            "gaze_point" => Ok(QueryKind::GazePoint),
            "laeo" => Ok(QueryKind::Laeo),
            "lah" => Ok(QueryKind::Lah),
            "sa" => Ok(QueryKind::Sa),
            _ => Err(Error::InvalidInput(format!("unknown query kind `{s}`"))),
        }
    }
}

const ONE: &str = "<OnePerson>";
const TWO: &str = "<TwoPersons>";

pub const INOUT_QUESTIONS: [&str; 10] = [
    "Is the gaze target of <OnePerson> inside the frame?",
    "Is <OnePerson> looking at something in the scene?",
    "What is the probability that the focus of <OnePerson> lies inside the current image area?",
    "How probable is it that <OnePerson> is looking at something within the boundaries of the scene?",
    "How certain are you that what <OnePerson> is looking at is shown in the image?",
    "Estimate the probability that the gaze point of <OnePerson> lies within the frame.",
    "Rate the likelihood that the gaze of <OnePerson> is directed at something within the frame.",
    "Assign a probability representing the chance that the visual target of <OnePerson> lies inside the frame.",
    "Determine the probability that the focus of <OnePerson> is contained within the scene.",
    "Evaluate the chance that <OnePerson> is looking at something that is in this photograph.",
];

pub const GAZE_POINT_QUESTIONS: [&str; 10] = [
    "Where is <OnePerson> looking?",
    "What is the gaze point of <OnePerson>?",
    "Where is the focus of <OnePerson>?",
    "Estimate the gaze point of <OnePerson>.",
    "Localize the gaze point of <OnePerson> within the image.",
    "Where is the visual target of <OnePerson> in the image?",
    "Where is the attention of <OnePerson> currently directed?",
    "Find the point of interest for <OnePerson>.",
    "Determine the gaze destination of <OnePerson>.",
    "What are the coordinates of the gaze target for <OnePerson> within the frame?",
];

pub const LAEO_QUESTIONS: [&str; 10] = [
    "Are the <TwoPersons> in the image looking at each other?",
    "Is there eye contact between the <TwoPersons>?",
    "There are <TwoPersons> in the image. Do these two people appear to be making eye contact?",
    "We can see <TwoPersons> in the image. Are their gazes directed toward one another?",
    "Are the <TwoPersons> mutually looking at each other?",
    "Estimate the probability that the <TwoPersons> are engaged in eye contact.",
    "What is the chance that <OnePerson> and <OnePerson> are looking at each other?",
    "Is there eye contact between <OnePerson> and <OnePerson>?",
    "Do the <TwoPersons> appear to be looking at each other?",
    "Would you say the <TwoPersons> are making eye contact?",
];

pub const LAH_QUESTIONS: [&str; 10] = [
    "Is <OnePerson> looking at <OnePerson>?",
    "There are <TwoPersons> in the image. Does <OnePerson> appear to be looking at <OnePerson>?",
    "We can see <TwoPersons> in the image. Is <OnePerson> looking at <OnePerson>?",
    "Estimate the probability that <OnePerson> is looking at <OnePerson>?",
    "What is the chance that <OnePerson> is looking at <OnePerson>?",
    "Does <OnePerson> seem to be looking toward <OnePerson>?",
    "How likely is it that <OnePerson> is looking at <OnePerson>?",
    "Give a probability that <OnePerson> is looking at <OnePerson>.",
    "There are <TwoPersons> visible in the image. Does <OnePerson> seem to be looking at <OnePerson>?",
    "Would you say <OnePerson> is looking at <OnePerson>?",
];

/// Shared-attention questions: the LAEO bank with "eye contact" and
/// "looking at each other" replaced by "sharing attention".
pub fn sa_questions() -> &'static [String] {
    static BANK: OnceLock<Vec<String>> = OnceLock::new();
    BANK.get_or_init(|| {
        LAEO_QUESTIONS
            .iter()
            .map(|q| {
                q.replace("eye contact", "sharing attention")
                    .replace("looking at each other", "sharing attention")
            })
            .collect()
    })
}

pub fn question_bank(kind: QueryKind) -> Vec<&'static str> {
    match kind {
        QueryKind::Inout => INOUT_QUESTIONS.to_vec(),
        QueryKind::GazePoint => GAZE_POINT_QUESTIONS.to_vec(),
        QueryKind::Laeo => LAEO_QUESTIONS.to_vec(),
        QueryKind::Lah => LAH_QUESTIONS.to_vec(),
        QueryKind::Sa => sa_questions().iter().map(String::as_str).collect(),
    }
}

pub const ONE_PERSON_PHRASES: [&str; 5] = [
    "the <person> whose head is within the bounding box <box>",
    "the <person> located at <box>",
    "the <person> whose head is enclosed by the bounding box <box>",
    "the <person> whose head is bounded by <box>",
    "the <person> whose head is identified in the region <box>",
];

pub const TWO_PERSON_PHRASES: [&str; 5] = [
    "the <persons> whose heads are within the bounding boxes <box1> and <box2>",
    "the <persons> located at <box1> and <box2>",
    "the <persons> whose heads are enclosed by the bounding boxes <box1> and <box2>",
    "the <persons> whose heads are bounded by <box1> and <box2>",
    "the <persons> whose heads are identified in the regions <box1> and <box2>",
];

pub const PERSON_NOUNS: [&str; 4] = ["person", "subject", "individual", "human"];
pub const PERSONS_NOUNS: [&str; 4] = ["people", "subjects", "individuals", "humans"];

/// A sampled person reference and the bank indices that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonPhrase {
    pub template: usize,
    pub noun: usize,
    pub text: String,
}

/// Samples a phrasing for one head (singular) or two heads (plural).
pub fn phrase_person<R: Rng + ?Sized>(
    boxes: &[HeadBox],
    scale: CoordScale,
    rng: &mut R,
) -> Result<PersonPhrase> {
    let template = rng.random_range(0..ONE_PERSON_PHRASES.len());
    let noun = rng.random_range(0..PERSON_NOUNS.len());
    phrase_with(boxes, scale, template, noun)
}

/// Deterministic phrasing for fixed bank indices.
pub fn phrase_with(
    boxes: &[HeadBox],
    scale: CoordScale,
    template: usize,
    noun: usize,
) -> Result<PersonPhrase> {
    let d = scale.default_decimals();
    let text = match boxes {
        [b] => ONE_PERSON_PHRASES[template]
            .replace("<person>", PERSON_NOUNS[noun])
            .replace("<box>", &format_box(b, scale, d)?),
        [a, b] => TWO_PERSON_PHRASES[template]
            .replace("<persons>", PERSONS_NOUNS[noun])
            .replace("<box1>", &format_box(a, scale, d)?)
            .replace("<box2>", &format_box(b, scale, d)?),
        _ => {
            return Err(Error::InvalidInput(format!(
                "person phrases take 1 or 2 boxes, got {}",
                boxes.len()
            )))
        }
    };
    Ok(PersonPhrase {
        template,
        noun,
        text,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TemplateIds {
    pub question: usize,
    pub person_phrases: Vec<usize>,
    pub person_nouns: Vec<usize>,
}

/// Composes a question for `kind` about `boxes` (one head for gaze kinds,
/// A then B for social kinds). Each placeholder is sampled independently.
pub fn sample_question<R: Rng + ?Sized>(
    kind: QueryKind,
    boxes: &[HeadBox],
    scale: CoordScale,
    rng: &mut R,
) -> Result<(String, TemplateIds)> {
    let need = if kind.is_gaze() { 1 } else { 2 };
    if boxes.len() != need {
        return Err(Error::TemplateMismatch(format!(
            "{kind} questions take {need} box(es), got {}",
            boxes.len()
        )));
    }
    let bank = question_bank(kind);
    let qi = rng.random_range(0..bank.len());
    let mut ids = TemplateIds {
        question: qi,
        ..TemplateIds::default()
    };
    let mut out = String::new();
    let mut rest = bank[qi];
    let mut singles = 0usize;
    loop {
        let next_one = rest.find(ONE);
        let next_two = rest.find(TWO);
        let (pos, len, two) = match (next_one, next_two) {
            (None, None) => break,
            (Some(a), Some(b)) if b < a => (b, TWO.len(), true),
            (Some(a), _) => (a, ONE.len(), false),
            (None, Some(b)) => (b, TWO.len(), true),
        };
        let target: &[HeadBox] = if two {
            boxes
        } else {
            let i = singles.min(boxes.len() - 1);
            singles += 1;
            std::slice::from_ref(&boxes[i])
        };
        let phrase = phrase_person(target, scale, rng)?;
        let before = &rest[..pos];
        out.push_str(before);
        // Templates like "Are the <TwoPersons>" already carry the article.
        let text = if before.ends_with("the ") {
            phrase.text.strip_prefix("the ").unwrap_or(&phrase.text)
        } else {
            &phrase.text
        };
        out.push_str(text);
        ids.person_phrases.push(phrase.template);
        ids.person_nouns.push(phrase.noun);
        rest = &rest[pos + len..];
    }
    out.push_str(rest);
    Ok((out, ids))
}

/// One single-turn SFT conversation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAPair {
    pub sample_id: String,
    pub dataset_id: DatasetId,
    pub image_ref: String,
    pub query_kind: QueryKind,
    pub question: String,
    pub answer: String,
    pub template_ids: TemplateIds,
    pub rng_seed: u64,
    pub coord_scale: CoordScale,
    pub boxes: Vec<HeadBox>,
}

impl QAPair {
    pub fn conversation(&self) -> Vec<Message> {
        vec![
            Message::new(
                Role::User,
                vec![
                    Part::ImageRef(self.image_ref.clone()),
                    Part::Text(self.question.clone()),
                ],
            ),
            Message::text(Role::Assistant, self.answer.clone()),
        ]
    }

    /// The same pair with its question redrawn from `seed`.
    pub fn resampled(&self, seed: u64) -> Result<QAPair> {
        let mut rng = rng_from(seed, &[&self.sample_id, self.query_kind.as_str()]);
        let (question, template_ids) =
            sample_question(self.query_kind, &self.boxes, self.coord_scale, &mut rng)?;
        Ok(QAPair {
            question,
            template_ids,
            rng_seed: seed,
            ..self.clone()
        })
    }
}

fn label_answer(key: &str, v: bool) -> String {
    format!("[{{\"{key}\": {}}}]", if v { "1.0" } else { "0.0" })
}

#[allow(clippy::too_many_arguments)]
fn make_pair(
    sample_id: &str,
    dataset_id: &DatasetId,
    image_ref: &str,
    kind: QueryKind,
    boxes: Vec<HeadBox>,
    answer: String,
    seed: u64,
    scale: CoordScale,
) -> Result<QAPair> {
    QAPair {
        sample_id: sample_id.to_string(),
        dataset_id: *dataset_id,
        image_ref: image_ref.to_string(),
        query_kind: kind,
        question: String::new(),
        answer,
        template_ids: TemplateIds::default(),
        rng_seed: seed,
        coord_scale: scale,
        boxes,
    }
    .resampled(seed)
}

/// In/out and gaze-point pairs for one annotated person. Samples whose
/// target is out of frame yield only the in/out pair.
pub fn build_gaze_qa(sample: &GazeSample, seed: u64, scale: CoordScale) -> Result<Vec<QAPair>> {
    sample.validate()?;
    let inside = sample.inout_label.unwrap_or(true);
    let mut out = vec![make_pair(
        &sample.sample_id,
        &sample.dataset_id,
        &sample.image_ref,
        QueryKind::Inout,
        vec![sample.head],
        label_answer("inout", inside),
        seed,
        scale,
    )?];
    if inside {
        if let Some(p) = sample.gaze_points.first() {
            let answer = format!(
                "[{{\"gaze_point\": {}}}]",
                format_point(*p, scale, scale.default_decimals())?
            );
            out.push(make_pair(
                &sample.sample_id,
                &sample.dataset_id,
                &sample.image_ref,
                QueryKind::GazePoint,
                vec![sample.head],
                answer,
                seed,
                scale,
            )?);
        }
    }
    Ok(out)
}

/// One labelled question for a social pair; `kind` must match the pair's task.
pub fn build_social_qa(
    pair: &SocialPair,
    kind: QueryKind,
    seed: u64,
    scale: CoordScale,
) -> Result<QAPair> {
    pair.validate()?;
    if kind != QueryKind::social(pair.task) {
        return Err(Error::TemplateMismatch(format!(
            "{kind} question requested for a {} pair `{}`",
            pair.task, pair.pair_id
        )));
    }
    make_pair(
        &pair.pair_id,
        &pair.dataset_id,
        &pair.image_ref,
        kind,
        vec![pair.head_a, pair.head_b],
        label_answer("label", pair.label),
        seed,
        scale,
    )
}

/// Source record for QA generation.
#[derive(Debug, Clone, Copy)]
pub enum QaSource<'a> {
    Gaze(&'a GazeSample),
    Social(&'a SocialPair),
}

pub fn build_qa_pairs(source: QaSource<'_>, seed: u64, scale: CoordScale) -> Result<Vec<QAPair>> {
    match source {
        QaSource::Gaze(s) => build_gaze_qa(s, seed, scale),
        QaSource::Social(p) => Ok(vec![build_social_qa(
            p,
            QueryKind::social(p.task),
            seed,
            scale,
        )?]),
    }
}

/// Seed used for a pair's question in a given export pass.
pub fn epoch_seed(base: u64, epoch: usize) -> u64 {
    derive_seed(base, &["epoch", &epoch.to_string()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sa_bank_substitutes_both_phrases() {
        let sa = sa_questions();
        assert_eq!(sa.len(), 10);
        assert!(sa.iter().all(|q| !q.contains("eye contact")));
        assert!(sa.iter().all(|q| !q.contains("looking at each other")));
        assert_eq!(
            sa[0],
            "Are the <TwoPersons> in the image sharing attention?"
        );
    }

    #[test]
    fn fixed_indices_give_the_expected_phrase() {
        let b = HeadBox::new(0.12, 0.03, 0.24, 0.18).unwrap();
        let p = phrase_with(&[b], CoordScale::Thousand, 3, 1).unwrap();
        assert_eq!(
            p.text,
            "the subject whose head is bounded by [120, 30, 240, 180]"
        );
    }

    #[test]
    fn twenty_single_phrasings_are_reachable() {
        let b = HeadBox::new(0.1, 0.1, 0.2, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..2000 {
            seen.insert(
                phrase_person(&[b], CoordScale::Unit, &mut rng)
                    .unwrap()
                    .text,
            );
        }
        assert_eq!(seen.len(), 20);
    }

    #[test]
    fn no_doubled_articles() {
        let a = HeadBox::new(0.1, 0.1, 0.2, 0.2).unwrap();
        let b = HeadBox::new(0.5, 0.1, 0.6, 0.2).unwrap();
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (q, _) =
                sample_question(QueryKind::Laeo, &[a, b], CoordScale::Unit, &mut rng).unwrap();
            assert!(!q.contains("the the"), "{q}");
            assert!(!q.contains('<'), "{q}");
        }
    }
}
