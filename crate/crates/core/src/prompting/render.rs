use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::coords::{format_box, CoordScale};
use super::exemplars::ExemplarBank;
use super::templates as t;
use crate::corpus::{GazeSample, SocialPair, SocialTask};
use crate::error::{Error, Result};
use crate::geometry::HeadBox;
use crate::seed::sha256_hex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PromptTask {
    GFo,
    LAEO,
    LAH,
    SA,
    #[serde(rename = "probe")]
    Probe,
}

impl PromptTask {
    pub fn social(task: SocialTask) -> Self {
        match task {
            SocialTask::LAEO => PromptTask::LAEO,
            SocialTask::LAH => PromptTask::LAH,
            SocialTask::SA => PromptTask::SA,
        }
    }

    pub fn social_task(self) -> Option<SocialTask> {
        match self {
            PromptTask::LAEO => Some(SocialTask::LAEO),
            PromptTask::LAH => Some(SocialTask::LAH),
            PromptTask::SA => Some(SocialTask::SA),
            _ => None,
        }
    }
}

impl fmt::Display for PromptTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PromptTask::GFo => "GFo",
            PromptTask::LAEO => "LAEO",
            PromptTask::LAH => "LAH",
            PromptTask::SA => "SA",
            PromptTask::Probe => "probe",
        })
    }
}

impl FromStr for PromptTask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gfo" | "gaze" => Ok(PromptTask::GFo),
            "laeo" => Ok(PromptTask::LAEO),
            "lah" => Ok(PromptTask::LAH),
            "sa" => Ok(PromptTask::SA),
            "probe" => Ok(PromptTask::Probe),
            _ => Err(Error::InvalidInput(format!("unknown prompt task `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Strategy {
    #[default]
    PrBase,
    PrCoTBase,
    PrCoTStruct,
    PrInContextCoT,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::PrBase,
        Strategy::PrCoTBase,
        Strategy::PrCoTStruct,
        Strategy::PrInContextCoT,
    ];
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::PrBase => "PrBase",
            Strategy::PrCoTBase => "PrCoTBase",
            Strategy::PrCoTStruct => "PrCoTStruct",
            Strategy::PrInContextCoT => "PrInContextCoT",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.trim_start_matches("pr") {
            "base" => Ok(Strategy::PrBase),
            "cotbase" => Ok(Strategy::PrCoTBase),
            "cotstruct" => Ok(Strategy::PrCoTStruct),
            "incontextcot" | "incontext" => Ok(Strategy::PrInContextCoT),
            _ => Err(Error::InvalidInput(format!(
                "unknown prompt strategy `{s}`"
            ))),
        }
    }
}

fn default_exemplar_limit() -> usize {
    2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PromptSpec {
    pub task: PromptTask,
    pub strategy: Strategy,
    #[serde(default)]
    pub coord_scale: CoordScale,
    /// Defaults to 3 at unit scale and 0 at thousand scale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decimals: Option<u32>,
    /// Number of worked examples kept for in-context prompts.
    #[serde(default = "default_exemplar_limit")]
    pub exemplar_limit: usize,
}

impl PromptSpec {
    pub fn new(task: PromptTask, strategy: Strategy, coord_scale: CoordScale) -> Self {
        PromptSpec {
            task,
            strategy,
            coord_scale,
            decimals: None,
            exemplar_limit: default_exemplar_limit(),
        }
    }

    pub fn decimals(&self) -> u32 {
        self.decimals
            .unwrap_or_else(|| self.coord_scale.default_decimals())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Text(String),
    ImageRef(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub parts: Vec<Part>,
}

impl Message {
    pub fn new(role: Role, parts: Vec<Part>) -> Self {
        Message { role, parts }
    }

    pub fn text(role: Role, text: impl Into<String>) -> Self {
        Message::new(role, vec![Part::Text(text.into())])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub messages: Vec<Message>,
    pub template_hash: String,
}

impl RenderedPrompt {
    pub fn new(messages: Vec<Message>) -> Self {
        let template_hash = content_digest(&messages);
        RenderedPrompt {
            messages,
            template_hash,
        }
    }

    /// Every image reference in message order; the query image is last.
    pub fn image_refs(&self) -> Vec<&str> {
        self.messages
            .iter()
            .flat_map(|m| m.parts.iter())
            .filter_map(|p| match p {
                Part::ImageRef(r) => Some(r.as_str()),
                Part::Text(_) => None,
            })
            .collect()
    }

    pub fn query_image(&self) -> Option<&str> {
        self.image_refs().last().copied()
    }

    /// Flat text view: system text bare, other turns as `role:\n...`, images
    /// shown as `<image>`, turns separated by a blank line.
    pub fn transcript(&self) -> String {
        self.messages
            .iter()
            .map(|m| {
                let body: String = m
                    .parts
                    .iter()
                    .map(|p| match p {
                        Part::Text(s) => s.as_str(),
                        Part::ImageRef(_) => "<image>",
                    })
                    .collect();
                match m.role {
                    Role::System => body,
                    r => format!("{r}:\n{body}"),
                }
            })
            .collect::<Vec<_>>()
            .join("\n\n")
    }
}

/// Digest over roles and texts; images contribute only their position.
fn content_digest(messages: &[Message]) -> String {
    let mut buf = String::new();
    for m in messages {
        buf.push_str(&m.role.to_string());
        buf.push('\u{1f}');
        for p in &m.parts {
            match p {
                Part::Text(s) => {
                    buf.push_str("T:");
                    buf.push_str(s);
                }
                Part::ImageRef(_) => buf.push('I'),
            }
            buf.push('\u{1e}');
        }
        buf.push('\u{1d}');
    }
    sha256_hex(buf.as_bytes())
}

/// What a prompt asks about.
#[derive(Debug, Clone, Copy)]
pub enum PromptTarget<'a> {
    Gaze(&'a GazeSample),
    Social(&'a SocialPair),
}

fn task_description(task: PromptTask) -> &'static str {
    match task {
        PromptTask::GFo => t::GFO_TASK,
        PromptTask::LAEO => t::SG_TASK_LAEO,
        PromptTask::LAH => t::SG_TASK_LAH,
        PromptTask::SA => t::SG_TASK_SA,
        PromptTask::Probe => "",
    }
}

fn relation_phrase(task: SocialTask) -> &'static str {
    match task {
        SocialTask::LAEO => "looking at each other",
        SocialTask::LAH => "person A looking at person B",
        SocialTask::SA => "shared attention",
    }
}

fn strategy_body(social: bool, strategy: Strategy) -> &'static str {
    match (social, strategy) {
        (false, Strategy::PrBase) => t::GFO_BASE,
        (false, Strategy::PrCoTBase) => t::GFO_COT_BASE,
        (false, Strategy::PrCoTStruct) => t::GFO_COT_STRUCT,
        (false, Strategy::PrInContextCoT) => t::GFO_IN_CONTEXT,
        (true, Strategy::PrBase) => t::SG_BASE,
        (true, Strategy::PrCoTBase) => t::SG_COT_BASE,
        (true, Strategy::PrCoTStruct) => t::SG_COT_STRUCT,
        (true, Strategy::PrInContextCoT) => t::SG_IN_CONTEXT,
    }
}

/// The user-side query text that follows the image.
fn query_text(task: PromptTask, boxes: &[String]) -> Result<String> {
    let need = if task == PromptTask::GFo { 1 } else { 2 };
    if boxes.len() != need {
        return Err(Error::TemplateMismatch(format!(
            "{task} prompts take {need} head box(es), got {}",
            boxes.len()
        )));
    }
    Ok(match task {
        PromptTask::GFo => boxes[0].clone(),
        PromptTask::LAEO => format!(
            " Analyze the image and determine whether the people with head boxes at {} and {} are looking at each other.",
            boxes[0], boxes[1]
        ),
        PromptTask::LAH => format!(
            " Analyze the image and determine whether the person with head box at {} is looking at the person with head box at {}.",
            boxes[0], boxes[1]
        ),
        PromptTask::SA => format!(
            " Analyze the image and determine whether the people with head boxes at {} and {} are sharing attention.",
            boxes[0], boxes[1]
        ),
        PromptTask::Probe => unreachable!("probe prompts are rendered separately"),
    })
}

/// Renders a zero-shot prompt for a gaze sample or a social pair.
pub fn render_prompt(
    spec: &PromptSpec,
    target: PromptTarget<'_>,
    exemplars: Option<&ExemplarBank>,
) -> Result<RenderedPrompt> {
    let (task, image_ref, boxes) = match target {
        PromptTarget::Gaze(s) => (PromptTask::GFo, &s.image_ref, vec![s.head]),
        PromptTarget::Social(p) => (
            PromptTask::social(p.task),
            &p.image_ref,
            vec![p.head_a, p.head_b],
        ),
    };
    if task != spec.task {
        return Err(Error::TemplateMismatch(format!(
            "spec asks for {} but the record is {task}",
            spec.task
        )));
    }
    render_boxes(spec, image_ref, &boxes, exemplars)
}

/// Renders a prompt from raw boxes: one for GFo, two (A then B) for social tasks.
pub fn render_boxes(
    spec: &PromptSpec,
    image_ref: &str,
    boxes: &[HeadBox],
    exemplars: Option<&ExemplarBank>,
) -> Result<RenderedPrompt> {
    let task = spec.task;
    if task == PromptTask::Probe {
        let b = boxes
            .first()
            .ok_or_else(|| Error::TemplateMismatch("probe prompts take one box".into()))?;
        return render_probe_prompt_with(image_ref, b, spec.coord_scale, spec.decimals());
    }
    let scale = spec.coord_scale;
    let decimals = spec.decimals();
    let social = task.social_task();

    let mut system = strategy_body(social.is_some(), spec.strategy)
        .replace(t::TASK_PLACEHOLDER, task_description(task));
    if let Some(rel) = social {
        system = system.replace(t::RELATION_PLACEHOLDER, relation_phrase(rel));
    }

    let mut messages = Vec::new();
    let in_context = spec.strategy == Strategy::PrInContextCoT;
    if in_context {
        let bank = exemplars.ok_or_else(|| Error::MissingExemplars(task.to_string()))?;
        let available = bank.for_task(task);
        let limit = spec.exemplar_limit;
        if limit == 0 || available.len() < limit {
            return Err(Error::MissingExemplars(format!(
                "{task}: need {limit} example(s), bank has {}",
                available.len()
            )));
        }
        if limit == 1 {
            system = system.replace(t::TWO_EXAMPLES, t::ONE_EXAMPLE);
        }
        messages.push(Message::text(Role::System, system));
        for ex in &available[..limit] {
            let user_text = match social {
                None => ex.box_text(scale, decimals)?,
                Some(_) => {
                    let texts = ex
                        .boxes
                        .iter()
                        .map(|b| format_box(b, scale, decimals))
                        .collect::<Result<Vec<_>>>()?;
                    query_text(task, &texts)?
                }
            };
            messages.push(Message::new(
                Role::User,
                vec![Part::ImageRef(bank.image_ref(ex)), Part::Text(user_text)],
            ));
            messages.push(Message::text(
                Role::Assistant,
                ex.assistant_text(scale, decimals)?,
            ));
        }
    } else {
        messages.push(Message::text(Role::System, system));
    }

    let texts = boxes
        .iter()
        .map(|b| format_box(b, scale, decimals))
        .collect::<Result<Vec<_>>>()?;
    let mut parts = Vec::with_capacity(3);
    if in_context {
        let closing = if social.is_some() {
            t::SG_CLOSING
        } else {
            t::GFO_CLOSING
        };
        parts.push(Part::Text(closing.to_string()));
    }
    parts.push(Part::ImageRef(image_ref.to_string()));
    parts.push(Part::Text(query_text(task, &texts)?));
    messages.push(Message::new(Role::User, parts));
    Ok(RenderedPrompt::new(messages))
}

/// The yes/no head-presence prompt for one box.
pub fn render_probe_prompt(
    image_ref: &str,
    bbox: &HeadBox,
    coord_scale: CoordScale,
) -> Result<RenderedPrompt> {
    render_probe_prompt_with(image_ref, bbox, coord_scale, coord_scale.default_decimals())
}

pub fn render_probe_prompt_with(
    image_ref: &str,
    bbox: &HeadBox,
    coord_scale: CoordScale,
    decimals: u32,
) -> Result<RenderedPrompt> {
    let text = t::PROBE.replace(
        t::BOX_PLACEHOLDER,
        &format_box(bbox, coord_scale, decimals)?,
    );
    Ok(RenderedPrompt::new(vec![Message::new(
        Role::User,
        vec![Part::ImageRef(image_ref.to_string()), Part::Text(text)],
    )]))
}
