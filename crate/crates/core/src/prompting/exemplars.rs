use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::coords::{format_box, format_value, CoordScale};
use super::PromptTask;
use crate::error::{Error, Result};
use crate::geometry::HeadBox;

const BUNDLED: &str = include_str!("../../assets/exemplars/exemplars.json");

/// One worked example: an image, its query boxes and the reference answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exemplar {
    pub image: String,
    pub boxes: Vec<HeadBox>,
    /// Unit-scale coordinate text to use verbatim instead of the formatter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_text: Option<String>,
    pub assistant: String,
}

/// Worked examples per task, loaded from a directory holding `exemplars.json`
/// next to the referenced images.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExemplarBank {
    #[serde(skip)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub gfo: Vec<Exemplar>,
    #[serde(default)]
    pub laeo: Vec<Exemplar>,
    #[serde(default)]
    pub lah: Vec<Exemplar>,
    #[serde(default)]
    pub sa: Vec<Exemplar>,
}

impl ExemplarBank {
    /// The bank compiled into the binary. Image names are bare filenames;
    /// the images themselves must be supplied by the user.
    pub fn bundled() -> Self {
        serde_json::from_str(BUNDLED).expect("bundled exemplar bank is valid JSON")
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("exemplars.json");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut bank: ExemplarBank = serde_json::from_str(&text)?;
        bank.dir = Some(dir.to_path_buf());
        Ok(bank)
    }

    pub fn for_task(&self, task: PromptTask) -> &[Exemplar] {
        match task {
            PromptTask::GFo => &self.gfo,
            PromptTask::LAEO => &self.laeo,
            PromptTask::LAH => &self.lah,
            PromptTask::SA => &self.sa,
            PromptTask::Probe => &[],
        }
    }

    pub fn image_ref(&self, ex: &Exemplar) -> String {
        match &self.dir {
            Some(d) => d.join(&ex.image).to_string_lossy().into_owned(),
            None => ex.image.clone(),
        }
    }
}

impl Exemplar {
    /// Coordinate text for the exemplar's head box in the requested scale.
    pub fn box_text(&self, scale: CoordScale, decimals: u32) -> Result<String> {
        let first = self
            .boxes
            .first()
            .ok_or_else(|| Error::InvalidInput(format!("exemplar `{}` has no box", self.image)))?;
        match (&self.box_text, scale) {
            (Some(t), CoordScale::Unit) => Ok(t.clone()),
            _ => format_box(first, scale, decimals),
        }
    }

    /// The reference answer with unit-scale gaze points rewritten into the
    /// requested scale.
    pub fn assistant_text(&self, scale: CoordScale, decimals: u32) -> Result<String> {
        if scale == CoordScale::Unit {
            return Ok(self.assistant.clone());
        }
        static RE: OnceLock<Regex> = OnceLock::new();
        let re = RE.get_or_init(|| {
            Regex::new(r#""gaze_point":\s*\[\s*([0-9.]+)\s*,\s*([0-9.]+)\s*\]"#).unwrap()
        });
        let mut err = None;
        let out = re.replace_all(&self.assistant, |c: &regex::Captures<'_>| {
            let conv = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("bad exemplar coordinate `{s}`")))
                    .and_then(|v| format_value(v, scale, decimals))
            };
            match (conv(&c[1]), conv(&c[2])) {
                (Ok(x), Ok(y)) => format!("\"gaze_point\": [{x}, {y}]"),
                (Err(e), _) | (_, Err(e)) => {
                    err = Some(e);
                    c[0].to_string()
                }
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(out.into_owned()),
        }
    }
}
