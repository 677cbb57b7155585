use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{HeadBox, Point2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DatasetId {
    GF,
    VAT,
    CP,
    #[serde(rename = "custom")]
    Custom,
}

impl fmt::Display for DatasetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetId::GF => "GF",
            DatasetId::VAT => "VAT",
            DatasetId::CP => "CP",
            DatasetId::Custom => "custom",
        })
    }
}

impl FromStr for DatasetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gf" | "gazefollow" => Ok(DatasetId::GF),
            "vat" | "videoattentiontarget" => Ok(DatasetId::VAT),
            "cp" | "childplay" => Ok(DatasetId::CP),
            "custom" => Ok(DatasetId::Custom),
            _ => Err(Error::InvalidInput(format!("unknown dataset `{s}`"))),
        }
    }
}

impl DatasetId {
    pub fn is_video(&self) -> bool {
        matches!(self, DatasetId::VAT | DatasetId::CP)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "val" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(Error::InvalidInput(format!("unknown split `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SocialTask {
    LAEO,
    LAH,
    SA,
}

impl SocialTask {
    pub const ALL: [SocialTask; 3] = [SocialTask::LAEO, SocialTask::LAH, SocialTask::SA];

    /// LAH is directed (A looks at B); LAEO and SA are symmetric.
    pub fn is_directed(&self) -> bool {
        matches!(self, SocialTask::LAH)
    }
}

impl fmt::Display for SocialTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SocialTask::LAEO => "LAEO",
            SocialTask::LAH => "LAH",
            SocialTask::SA => "SA",
        })
    }
}

impl FromStr for SocialTask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "LAEO" => Ok(SocialTask::LAEO),
            "LAH" => Ok(SocialTask::LAH),
            "SA" => Ok(SocialTask::SA),
            _ => Err(Error::InvalidInput(format!("unknown social task `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImageSize {
    pub width: u32,
    pub height: u32,
}

impl ImageSize {
    pub fn new(width: u32, height: u32) -> Self {
        ImageSize { width, height }
    }

    pub fn diagonal(&self) -> f64 {
        (self.width as f64).hypot(self.height as f64)
    }
}

/// One annotated person for gaze following.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    pub sample_id: String,
    pub dataset_id: DatasetId,
    pub image_ref: String,
    pub image_size: ImageSize,
    pub head: HeadBox,
    pub gaze_points: Vec<Point2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inout_label: Option<bool>,
    pub split: Split,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_index: Option<u64>,
}

impl GazeSample {
    pub fn validate(&self) -> Result<()> {
        if self.gaze_points.is_empty() && self.inout_label != Some(false) {
            return Err(Error::InvalidInput(format!(
                "sample `{}` is in-frame but has no gaze point",
                self.sample_id
            )));
        }
        if let Some(p) = self.gaze_points.iter().find(|p| !p.is_unit()) {
            return Err(Error::InvalidPoint(format!(
                "sample `{}`: ({}, {}) outside [0,1]²",
                self.sample_id, p.x, p.y
            )));
        }
        Ok(())
    }

    /// In-frame target with at least one annotated point.
    pub fn has_target(&self) -> bool {
        self.inout_label != Some(false) && !self.gaze_points.is_empty()
    }
}

/// A pair of heads labelled with one social-gaze relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocialPair {
    pub pair_id: String,
    pub dataset_id: DatasetId,
    pub image_ref: String,
    pub image_size: ImageSize,
    pub head_a: HeadBox,
    pub head_b: HeadBox,
    pub task: SocialTask,
    pub label: bool,
    pub ordered: bool,
    pub split: Split,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_index: Option<u64>,
}

impl SocialPair {
    pub fn validate(&self) -> Result<()> {
        if self.head_a == self.head_b {
            return Err(Error::InvalidInput(format!(
                "pair `{}` uses the same box twice",
                self.pair_id
            )));
        }
        if self.task.is_directed() && !self.ordered {
            return Err(Error::InvalidInput(format!(
                "LAH pair `{}` must be ordered",
                self.pair_id
            )));
        }
        Ok(())
    }

    pub fn min_head_area(&self) -> f64 {
        self.head_a.area().min(self.head_b.area())
    }
}

/// A box for the head-localization probe: an annotated head or a generated
/// negative with zero overlap against every annotated head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeBox {
    pub probe_id: String,
    pub image_ref: String,
    pub image_size: ImageSize,
    #[serde(rename = "box")]
    pub bbox: HeadBox,
    pub is_positive: bool,
    pub distance_to_nearest_gt: f64,
}
