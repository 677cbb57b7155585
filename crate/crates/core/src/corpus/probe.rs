use rand::Rng;
use serde::{Deserialize, Serialize};

use super::records::{ImageSize, ProbeBox};
use crate::error::{Error, Result};
use crate::geometry::HeadBox;
use crate::seed;

pub const MAX_PLACEMENT_TRIES: usize = 1000;

/// All annotated heads of one probe image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeImage {
    pub image_ref: String,
    pub image_size: ImageSize,
    pub heads: Vec<HeadBox>,
}

fn center_distance(a: &HeadBox, b: &HeadBox, size: ImageSize) -> f64 {
    let (ca, cb) = (a.center(), b.center());
    let dx = (ca.x - cb.x) * size.width as f64;
    let dy = (ca.y - cb.y) * size.height as f64;
    dx.hypot(dy) / size.diagonal()
}

/// For every annotated head emits the head itself and one same-size box
/// placed uniformly at random where it has zero IoU with all heads.
pub fn generate_probe_negatives(
    image_ref: &str,
    gt_heads: &[HeadBox],
    image_size: ImageSize,
    rng_seed: u64,
) -> Result<Vec<ProbeBox>> {
    if gt_heads.is_empty() {
        return Err(Error::InvalidInput(format!(
            "probe image `{image_ref}` has no annotated heads"
        )));
    }
    let mut rng = seed::rng_from(rng_seed, &["probe", image_ref]);
    let mut out = Vec::with_capacity(gt_heads.len() * 2);
    for (k, head) in gt_heads.iter().enumerate() {
        out.push(ProbeBox {
            probe_id: format!("{image_ref}#{k}+"),
            image_ref: image_ref.to_string(),
            image_size,
            bbox: *head,
            is_positive: true,
            distance_to_nearest_gt: 0.0,
        });

        let (w, h) = (head.width(), head.height());
        let mut placed = None;
        for _ in 0..MAX_PLACEMENT_TRIES {
            let x = rng.random::<f64>() * (1.0 - w);
            let y = rng.random::<f64>() * (1.0 - h);
            let Ok(candidate) = HeadBox::new(x, y, (x + w).min(1.0), (y + h).min(1.0)) else {
                continue;
            };
            if gt_heads.iter().all(|g| g.iou(&candidate) == 0.0) {
                placed = Some(candidate);
                break;
            }
        }
        let negative = placed.ok_or_else(|| Error::NoDisjointPlacement {
            image_ref: image_ref.to_string(),
            width: w,
            height: h,
        })?;
        let distance = gt_heads
            .iter()
            .map(|g| center_distance(g, &negative, image_size))
            .fold(f64::INFINITY, f64::min);
        out.push(ProbeBox {
            probe_id: format!("{image_ref}#{k}-"),
            image_ref: image_ref.to_string(),
            image_size,
            bbox: negative,
            is_positive: false,
            distance_to_nearest_gt: distance,
        });
    }
    Ok(out)
}

pub fn generate_probe_corpus(images: &[ProbeImage], rng_seed: u64) -> Result<Vec<ProbeBox>> {
    let mut out = Vec::new();
    for image in images {
        out.extend(generate_probe_negatives(
            &image.image_ref,
            &image.heads,
            image.image_size,
            rng_seed,
        )?);
    }
    Ok(out)
}
