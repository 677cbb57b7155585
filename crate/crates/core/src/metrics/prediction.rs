use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::SocialTask;
use crate::error::{Error, Result};
use crate::geometry::Point2;

/// What a prediction answers. `Gfo` is the joint in/out + point answer of the
/// zero-shot prompts; `GfoPoint` and `GfoInout` are the decoupled queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PredictionTask {
    #[serde(rename = "GFo")]
    Gfo,
    #[serde(rename = "GFo_point")]
    GfoPoint,
    #[serde(rename = "GFo_inout")]
    GfoInout,
    #[serde(rename = "SG_LAEO")]
    SgLaeo,
    #[serde(rename = "SG_LAH")]
    SgLah,
    #[serde(rename = "SG_SA")]
    SgSa,
    #[serde(rename = "probe")]
    Probe,
}

impl PredictionTask {
    pub fn social(task: SocialTask) -> Self {
        match task {
            SocialTask::LAEO => PredictionTask::SgLaeo,
            SocialTask::LAH => PredictionTask::SgLah,
            SocialTask::SA => PredictionTask::SgSa,
        }
    }

    pub fn social_task(&self) -> Option<SocialTask> {
        match self {
            PredictionTask::SgLaeo => Some(SocialTask::LAEO),
            PredictionTask::SgLah => Some(SocialTask::LAH),
            PredictionTask::SgSa => Some(SocialTask::SA),
            _ => None,
        }
    }

    pub fn is_gaze(&self) -> bool {
        matches!(
            self,
            PredictionTask::Gfo | PredictionTask::GfoPoint | PredictionTask::GfoInout
        )
    }

    pub fn needs_point(&self) -> bool {
        matches!(self, PredictionTask::Gfo | PredictionTask::GfoPoint)
    }

    pub fn needs_p_io(&self) -> bool {
        matches!(self, PredictionTask::Gfo | PredictionTask::GfoInout)
    }

    pub fn needs_p_sg(&self) -> bool {
        !self.is_gaze()
    }
}

impl fmt::Display for PredictionTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        f.write_str(s.as_ref().and_then(|v| v.as_str()).unwrap_or("?"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseStatus {
    Ok,
    Clamped,
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeTag {
    pub temperature: f64,
    pub sample_index: u32,
}

impl Default for DecodeTag {
    fn default() -> Self {
        DecodeTag {
            temperature: 0.0,
            sample_index: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub sample_id: String,
    pub task: PredictionTask,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_io: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Point2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_sg: Option<f64>,
    pub parse_status: ParseStatus,
    pub decode_tag: DecodeTag,
}

impl PredictionRecord {
    pub fn gaze(sample_id: impl Into<String>, p_io: f64, point: Point2) -> Self {
        PredictionRecord {
            sample_id: sample_id.into(),
            task: PredictionTask::Gfo,
            p_io: Some(p_io),
            point: Some(point),
            p_sg: None,
            parse_status: ParseStatus::Ok,
            decode_tag: DecodeTag::default(),
        }
    }

    pub fn point_only(sample_id: impl Into<String>, point: Point2) -> Self {
        PredictionRecord {
            task: PredictionTask::GfoPoint,
            p_io: None,
            ..Self::gaze(sample_id, 0.0, point)
        }
    }

    pub fn social(sample_id: impl Into<String>, task: SocialTask, p_sg: f64) -> Self {
        PredictionRecord {
            sample_id: sample_id.into(),
            task: PredictionTask::social(task),
            p_io: None,
            point: None,
            p_sg: Some(p_sg),
            parse_status: ParseStatus::Ok,
            decode_tag: DecodeTag::default(),
        }
    }

    pub fn with_tag(mut self, temperature: f64, sample_index: u32) -> Self {
        self.decode_tag = DecodeTag {
            temperature,
            sample_index,
        };
        self
    }

    pub fn with_status(mut self, status: ParseStatus) -> Self {
        self.parse_status = status;
        self
    }

    /// Checks that exactly the fields demanded by `task` are present and
    /// probabilities lie in `[0,1]`.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| {
            Err(Error::InvalidInput(format!(
                "prediction `{}` ({}): {what}",
                self.sample_id, self.task
            )))
        };
        if self.task.needs_point() != self.point.is_some() {
            return bad("point presence does not match task");
        }
        if self.task.needs_p_io() != self.p_io.is_some() {
            return bad("p_io presence does not match task");
        }
        if self.task.needs_p_sg() != self.p_sg.is_some() {
            return bad("p_sg presence does not match task");
        }
        let in_unit = |p: Option<f64>| p.is_none_or(|v| (0.0..=1.0).contains(&v));
        if !in_unit(self.p_io) || !in_unit(self.p_sg) {
            return bad("probability outside [0,1]");
        }
        if self.point.is_some_and(|p| !p.is_unit()) {
            return bad("point outside [0,1]²");
        }
        Ok(())
    }
}
