//! Synthetic corpora shared by the integration tests.
#![allow(dead_code)]

pub mod goldens;
pub mod oracles;
pub mod parser_cases;
pub mod qa;

use gazebench_core::corpus::{
    DatasetId, GazeSample, ImageSize, ProbeBox, Record, SocialPair, SocialTask, Split,
};
use gazebench_core::{HeadBox, Point2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn hb(x0: f64, y0: f64, x1: f64, y1: f64) -> HeadBox {
    HeadBox::new(x0, y0, x1, y1).unwrap()
}

pub fn gaze(id: &str, dataset: DatasetId, head: HeadBox, points: Vec<Point2>) -> GazeSample {
    GazeSample {
        sample_id: id.to_string(),
        dataset_id: dataset,
        image_ref: format!("{id}.jpg"),
        image_size: ImageSize::new(640, 480),
        head,
        gaze_points: points,
        inout_label: Some(true),
        split: Split::Test,
        frame_index: None,
    }
}

pub fn social(id: &str, task: SocialTask, label: bool, a: HeadBox, b: HeadBox) -> SocialPair {
    SocialPair {
        pair_id: id.to_string(),
        dataset_id: DatasetId::VAT,
        image_ref: format!("{id}.jpg"),
        image_size: ImageSize::new(640, 480),
        head_a: a,
        head_b: b,
        task,
        label,
        ordered: true,
        split: Split::Test,
        frame_index: None,
    }
}

fn random_head(rng: &mut ChaCha8Rng) -> HeadBox {
    let w = rng.random_range(0.03..0.12);
    let x = rng.random_range(0.0..0.45 - w);
    let y = rng.random_range(0.0..0.5);
    hb(x, y, x + w, y + w)
}

/// `n_gaze` single-annotation gaze samples spread over GF/VAT/CP (target
/// x kept below 0.85 so a +0.1 offset stays inside the frame) followed by
/// `n_social` social pairs with exactly balanced labels per task.
pub fn synthetic_corpus(n_gaze: usize, n_social: usize, seed: u64) -> Vec<Record> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let datasets = [DatasetId::GF, DatasetId::VAT, DatasetId::CP];
    let mut out = Vec::new();
    for i in 0..n_gaze {
        let head = random_head(&mut rng);
        let p = Point2::new(rng.random_range(0.5..0.85), rng.random_range(0.05..0.95));
        out.push(gaze(&format!("g{i:04}"), datasets[i % 3], head, vec![p]).into());
    }
    for i in 0..n_social {
        let task = SocialTask::ALL[(i / 2) % 3];
        let a = random_head(&mut rng);
        let x = rng.random_range(0.5..0.85);
        let b = hb(x, 0.3, x + 0.1, 0.4);
        out.push(social(&format!("s{i:04}"), task, i % 2 == 0, a, b).into());
    }
    out
}

/// Positive head boxes paired with disjoint negatives.
pub fn probe_corpus(n_pairs: usize) -> Vec<Record> {
    let mut out = Vec::new();
    for i in 0..n_pairs {
        let size = ImageSize::new(640, 480);
        out.push(Record::Probe(ProbeBox {
            probe_id: format!("p{i}_pos"),
            image_ref: format!("probe{i}.jpg"),
            image_size: size,
            bbox: hb(0.1, 0.1, 0.2, 0.2),
            is_positive: true,
            distance_to_nearest_gt: 0.0,
        }));
        out.push(Record::Probe(ProbeBox {
            probe_id: format!("p{i}_neg"),
            image_ref: format!("probe{i}.jpg"),
            image_size: size,
            bbox: hb(0.6, 0.6, 0.7, 0.7),
            is_positive: false,
            distance_to_nearest_gt: 0.5,
        }));
    }
    out
}

/// Random social pools for one corpus: per task, some positives and at
/// least as many candidate negatives, with unordered duplicates sprinkled in.
pub fn random_social_pool(seed: u64) -> (Vec<SocialPair>, Vec<SocialPair>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    let mut id = 0;
    for task in SocialTask::ALL {
        let n_pos = rng.random_range(0..15);
        let n_neg = n_pos + rng.random_range(0..10);
        for k in 0..n_pos + n_neg {
            let label = k < n_pos;
            let a = random_head(&mut rng);
            let b = hb(0.6, 0.1, 0.7 + 0.02 * rng.random_range(0..5) as f64, 0.2);
            let mut p = social(&format!("r{seed}_{id}"), task, label, a, b);
            p.ordered = task == SocialTask::LAH;
            p.frame_index = Some(rng.random_range(0..300));
            id += 1;
            let dup = !p.ordered && rng.random_bool(0.15);
            let twin = dup.then(|| {
                let mut t = p.clone();
                t.pair_id = format!("r{seed}_{id}_swap");
                std::mem::swap(&mut t.head_a, &mut t.head_b);
                t
            });
            let bucket = if label { &mut pos } else { &mut neg };
            bucket.push(p);
            bucket.extend(twin);
        }
    }
    (pos, neg)
}

/// `frames` consecutive gaze frames for each of `videos` clips.
pub fn video_frames(videos: usize, frames: u64) -> Vec<GazeSample> {
    let mut out = Vec::new();
    for v in 0..videos {
        for f in 0..frames {
            let mut s = gaze(
                &format!("v{v}_f{f}"),
                DatasetId::VAT,
                hb(0.1, 0.1, 0.2, 0.2),
                vec![Point2::new(0.5, 0.5)],
            );
            s.image_ref = format!("video{v}/{f:05}.jpg");
            s.frame_index = Some(f);
            out.push(s);
        }
    }
    out
}
