use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use super::records::{GazeSample, SocialPair, SocialTask};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub frame_stride: usize,
    pub min_head_area_frac: f64,
    /// Measured in retained (post-stride) frames.
    pub boundary_margin_frames: u64,
    pub negatives_per_positive: f64,
    pub rng_seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            frame_stride: 3,
            min_head_area_frac: 0.0005,
            boundary_margin_frames: 2,
            negatives_per_positive: 1.0,
            rng_seed: 0,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frame_stride == 0 {
            return Err(Error::Config("frame_stride must be >= 1".into()));
        }
        if !(self.negatives_per_positive > 0.0 && self.negatives_per_positive.is_finite()) {
            return Err(Error::Config("negatives_per_positive must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.min_head_area_frac) {
            return Err(Error::Config(
                "min_head_area_frac must lie in [0, 1)".into(),
            ));
        }
        Ok(())
    }
}

pub trait FrameIndexed {
    fn record_id(&self) -> &str;
    fn frame_index(&self) -> Option<u64>;
}

impl FrameIndexed for GazeSample {
    fn record_id(&self) -> &str {
        &self.sample_id
    }
    fn frame_index(&self) -> Option<u64> {
        self.frame_index
    }
}

impl FrameIndexed for SocialPair {
    fn record_id(&self) -> &str {
        &self.pair_id
    }
    fn frame_index(&self) -> Option<u64> {
        self.frame_index
    }
}

/// Keeps records whose frame index is a multiple of `stride`.
///
/// Frame indices are per video, so the rule applies to every video
/// independently; relative order is preserved.
pub fn subsample_frames<T: FrameIndexed + Clone>(records: &[T], stride: usize) -> Result<Vec<T>> {
    if stride == 0 {
        return Err(Error::Config("stride must be >= 1".into()));
    }
    if stride == 1 {
        return Ok(records.to_vec());
    }
    let mut kept = Vec::new();
    for r in records {
        let frame = r
            .frame_index()
            .ok_or_else(|| Error::MissingFrameIndex(r.record_id().to_string()))?;
        if frame % stride as u64 == 0 {
            kept.push(r.clone());
        }
    }
    Ok(kept)
}

/// Inclusive frame span of one annotated gaze event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventInterval {
    pub start: u64,
    pub end: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input: usize,
    pub kept: usize,
    pub small_head: usize,
    pub near_boundary: usize,
    pub min_head_area_frac: f64,
    pub boundary_margin_frames: u64,
}

/// Drops pairs with a small head and positive pairs close to the start or
/// end of their gaze event.
pub fn filter_social_annotations(
    pairs: &[SocialPair],
    events: Option<&HashMap<String, Vec<EventInterval>>>,
    cfg: &SamplingConfig,
) -> (Vec<SocialPair>, FilterReport) {
    let margin = cfg.boundary_margin_frames * cfg.frame_stride.max(1) as u64;
    let mut report = FilterReport {
        input: pairs.len(),
        min_head_area_frac: cfg.min_head_area_frac,
        boundary_margin_frames: cfg.boundary_margin_frames,
        ..Default::default()
    };
    let mut kept = Vec::new();
    for pair in pairs {
        if pair.min_head_area() < cfg.min_head_area_frac {
            report.small_head += 1;
            continue;
        }
        let near_boundary = pair.label
            && margin > 0
            && match (pair.frame_index, events.and_then(|e| e.get(&pair.pair_id))) {
                (Some(frame), Some(intervals)) => intervals
                    .iter()
                    .any(|iv| frame.abs_diff(iv.start) < margin || frame.abs_diff(iv.end) < margin),
                _ => false,
            };
        if near_boundary {
            report.near_boundary += 1;
            continue;
        }
        kept.push(pair.clone());
    }
    report.kept = kept.len();
    (kept, report)
}

fn unordered_key(p: &SocialPair) -> (String, String, Option<u64>, SocialTask, bool, [[u64; 4]; 2]) {
    let a = p.head_a.coords().map(f64::to_bits);
    let b = p.head_b.coords().map(f64::to_bits);
    let boxes = if a <= b { [a, b] } else { [b, a] };
    (
        p.dataset_id.to_string(),
        p.image_ref.clone(),
        p.frame_index,
        p.task,
        p.label,
        boxes,
    )
}

/// Collapses (A,B)/(B,A) duplicates among unordered pairs; ordered pairs
/// pass through untouched. First occurrence wins.
pub fn dedup_unordered(pairs: &[SocialPair]) -> Vec<SocialPair> {
    let mut seen = HashSet::new();
    pairs
        .iter()
        .filter(|p| p.ordered || seen.insert(unordered_key(p)))
        .cloned()
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskCounts {
    pub positives_before_dedup: usize,
    pub positives: usize,
    pub negatives_before_dedup: usize,
    pub negatives_available: usize,
    pub negatives_sampled: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SamplingReport {
    pub per_task: BTreeMap<SocialTask, TaskCounts>,
    pub negatives_per_positive: f64,
    pub rng_seed: u64,
}

fn needed_negatives(ratio: f64, positives: usize) -> usize {
    // ratio × n lands a hair above an integer for e.g. 1.1 × 10.
    let exact = ratio * positives as f64;
    let rounded = exact.round();
    if (exact - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        exact.ceil() as usize
    }
}

/// Draws ⌈ratio × |positives|⌉ negatives per task without replacement and
/// returns positives and negatives in one seeded shuffle.
pub fn sample_balanced_pairs(
    positives: &[SocialPair],
    candidate_negatives: &[SocialPair],
    cfg: &SamplingConfig,
) -> Result<(Vec<SocialPair>, SamplingReport)> {
    cfg.validate()?;
    if let Some(p) = positives.iter().find(|p| !p.label) {
        return Err(Error::InvalidInput(format!(
            "positive set contains negative pair `{}`",
            p.pair_id
        )));
    }
    if let Some(p) = candidate_negatives.iter().find(|p| p.label) {
        return Err(Error::InvalidInput(format!(
            "negative candidates contain positive pair `{}`",
            p.pair_id
        )));
    }

    let mut rng = seed::rng_from(cfg.rng_seed, &["balanced-pairs"]);
    let mut report = SamplingReport {
        negatives_per_positive: cfg.negatives_per_positive,
        rng_seed: cfg.rng_seed,
        ..Default::default()
    };
    let mut out = Vec::new();
    for task in SocialTask::ALL {
        let pos_raw: Vec<SocialPair> = positives
            .iter()
            .filter(|p| p.task == task)
            .cloned()
            .collect();
        let neg_raw: Vec<SocialPair> = candidate_negatives
            .iter()
            .filter(|p| p.task == task)
            .cloned()
            .collect();
        let pos = dedup_unordered(&pos_raw);
        let neg = dedup_unordered(&neg_raw);
        let needed = needed_negatives(cfg.negatives_per_positive, pos.len());
        if neg.len() < needed {
            return Err(Error::InsufficientNegatives {
                task: task.to_string(),
                needed,
                available: neg.len(),
            });
        }
        let mut picked = index::sample(&mut rng, neg.len(), needed).into_vec();
        picked.sort_unstable();
        report.per_task.insert(
            task,
            TaskCounts {
                positives_before_dedup: pos_raw.len(),
                positives: pos.len(),
                negatives_before_dedup: neg_raw.len(),
                negatives_available: neg.len(),
                negatives_sampled: needed,
            },
        );
        out.extend(pos);
        out.extend(picked.into_iter().map(|i| neg[i].clone()));
    }
    out.shuffle(&mut rng);
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::records::{DatasetId, ImageSize, Split};
    use crate::geometry::HeadBox;

    fn pair(id: usize, task: SocialTask, label: bool, frame: u64) -> SocialPair {
        let off = (id % 97) as f64 * 0.004;
        SocialPair {
            pair_id: format!("p{id}"),
            dataset_id: DatasetId::VAT,
            image_ref: format!("vid{}/f{frame}.jpg", id % 3),
            image_size: ImageSize::new(640, 480),
            head_a: HeadBox::new(0.1, 0.1, 0.2 + off, 0.2).unwrap(),
            head_b: HeadBox::new(0.5, 0.5, 0.6, 0.6 + off).unwrap(),
            task,
            label,
            ordered: true,
            split: Split::Test,
            frame_index: Some(frame),
        }
    }

    #[test]
    fn stride_three_keeps_multiples() {
        let records: Vec<_> = (0..9)
            .map(|f| pair(f as usize, SocialTask::LAEO, true, f))
            .collect();
        let kept = subsample_frames(&records, 3).unwrap();
        let frames: Vec<_> = kept.iter().map(|p| p.frame_index.unwrap()).collect();
        assert_eq!(frames, vec![0, 3, 6]);
        assert_eq!(subsample_frames(&records, 1).unwrap(), records);
    }

    #[test]
    fn stride_applies_per_video() {
        let mut records = Vec::new();
        for video in 0..2 {
            for f in 0..3 {
                let mut p = pair(video * 10 + f as usize, SocialTask::SA, true, f);
                p.image_ref = format!("video{video}/{f}.jpg");
                records.push(p);
            }
        }
        let kept = subsample_frames(&records, 3).unwrap();
        assert_eq!(kept.len(), 2);
        assert!(kept.iter().all(|p| p.frame_index == Some(0)));
    }

    #[test]
    fn missing_frame_index_names_record() {
        let mut p = pair(7, SocialTask::LAH, true, 0);
        p.frame_index = None;
        let err = subsample_frames(&[p], 3).unwrap_err();
        assert!(err.to_string().contains("p7"));
    }

    #[test]
    fn small_heads_removed() {
        let mut p = pair(1, SocialTask::LAEO, false, 0);
        p.head_a = HeadBox::new(0.0, 0.0, 0.01, 0.01).unwrap();
        p.head_b = HeadBox::new(0.5, 0.5, 0.6, 0.6).unwrap();
        let cfg = SamplingConfig::default();
        let (kept, report) = filter_social_annotations(&[p], None, &cfg);
        assert!(kept.is_empty());
        assert_eq!(report.small_head, 1);
    }

    #[test]
    fn boundary_margin() {
        let p = pair(1, SocialTask::LAEO, true, 10);
        let events = HashMap::from([(
            p.pair_id.clone(),
            vec![EventInterval { start: 10, end: 40 }],
        )]);
        let cfg = SamplingConfig::default();
        let (kept, report) =
            filter_social_annotations(std::slice::from_ref(&p), Some(&events), &cfg);
        assert!(kept.is_empty());
        assert_eq!(report.near_boundary, 1);

        let cfg0 = SamplingConfig {
            boundary_margin_frames: 0,
            ..cfg
        };
        let (kept, report) = filter_social_annotations(&[p], Some(&events), &cfg0);
        assert_eq!(kept.len(), 1);
        assert_eq!(report.near_boundary, 0);
    }

    #[test]
    fn negatives_are_not_boundary_filtered() {
        let p = pair(1, SocialTask::SA, false, 10);
        let events = HashMap::from([(
            p.pair_id.clone(),
            vec![EventInterval { start: 10, end: 12 }],
        )]);
        let (kept, _) = filter_social_annotations(&[p], Some(&events), &SamplingConfig::default());
        assert_eq!(kept.len(), 1);
    }

    #[test]
    fn balanced_and_deterministic() {
        let pos: Vec<_> = (0..40)
            .map(|i| pair(i, SocialTask::LAH, true, i as u64))
            .collect();
        let neg: Vec<_> = (100..200)
            .map(|i| pair(i, SocialTask::LAH, false, i as u64))
            .collect();
        let cfg = SamplingConfig {
            rng_seed: 11,
            ..Default::default()
        };
        let (a, report) = sample_balanced_pairs(&pos, &neg, &cfg).unwrap();
        let (b, _) = sample_balanced_pairs(&pos, &neg, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iter().filter(|p| p.label).count(), 40);
        assert_eq!(a.iter().filter(|p| !p.label).count(), 40);
        assert_eq!(report.per_task[&SocialTask::LAH].negatives_sampled, 40);
        assert_eq!(report.per_task[&SocialTask::LAEO].negatives_sampled, 0);
    }

    #[test]
    fn insufficient_negatives_reports_deficit() {
        let pos: Vec<_> = (0..5).map(|i| pair(i, SocialTask::SA, true, 0)).collect();
        let neg: Vec<_> = (10..12)
            .map(|i| pair(i, SocialTask::SA, false, 0))
            .collect();
        let err = sample_balanced_pairs(&pos, &neg, &SamplingConfig::default()).unwrap_err();
        assert!(err.to_string().contains("deficit 3"), "{err}");
    }

    #[test]
    fn unordered_duplicates_collapse() {
        let mut ab = pair(1, SocialTask::LAEO, true, 0);
        ab.ordered = false;
        let mut ba = ab.clone();
        ba.pair_id = "p1-rev".into();
        std::mem::swap(&mut ba.head_a, &mut ba.head_b);
        assert_eq!(dedup_unordered(&[ab.clone(), ba.clone()]).len(), 1);
        ab.ordered = true;
        ba.ordered = true;
        assert_eq!(dedup_unordered(&[ab, ba]).len(), 2);
    }

    #[test]
    fn fractional_ratio_rounds_up() {
        assert_eq!(needed_negatives(1.0, 4736), 4736);
        assert_eq!(needed_negatives(1.5, 3), 5);
        assert_eq!(needed_negatives(1.1, 10), 11);
        assert_eq!(needed_negatives(1.0, 0), 0);
    }
}
