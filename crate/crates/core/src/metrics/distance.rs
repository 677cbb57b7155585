use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{HeadBox, Point2};

pub const DEGENERATE_EPS: f64 = 1e-9;

/// Euclidean distance in unit-normalized image space.
pub fn l2(p: Point2, q: Point2) -> f64 {
    (p.x - q.x).hypot(p.y - q.y)
}

/// How "Avg L2" treats samples with several annotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AvgMode {
    /// Mean of the distances to each annotation.
    #[default]
    PerAnnotation,
    /// Distance to the mean annotation.
    Centroid,
}

/// Returns `(avg_l2, min_l2)` of `pred` against every annotation.
pub fn avg_min_l2(pred: Point2, gts: &[Point2], mode: AvgMode) -> Result<(f64, f64)> {
    if gts.is_empty() {
        return Err(Error::InvalidInput("no ground-truth gaze points".into()));
    }
    let dists: Vec<f64> = gts.iter().map(|g| l2(pred, *g)).collect();
    let min = dists.iter().copied().fold(f64::INFINITY, f64::min);
    let avg = match mode {
        AvgMode::PerAnnotation => super::pairwise_sum(&dists) / dists.len() as f64,
        AvgMode::Centroid => l2(pred, Point2::mean(gts).expect("non-empty")),
    };
    Ok((avg, min))
}

/// Angle in degrees between head-center→prediction and head-center→mean
/// annotation.
pub fn angular_error(head: &HeadBox, pred: Point2, ref_points: &[Point2]) -> Result<f64> {
    let reference = Point2::mean(ref_points)
        .ok_or_else(|| Error::InvalidInput("no reference gaze points".into()))?;
    let c = head.center();
    let (px, py) = pred.offset_from(c);
    let (rx, ry) = reference.offset_from(c);
    let (np, nr) = (px.hypot(py), rx.hypot(ry));
    if np <= DEGENERATE_EPS || nr <= DEGENERATE_EPS {
        return Err(Error::DegenerateDirection);
    }
    let (cross, dot) = (px * ry - py * rx, px * rx + py * ry);
    Ok(cross.abs().atan2(dot).to_degrees())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn l2_examples() {
        assert_eq!(l2(Point2::new(0.3, 0.3), Point2::new(0.3, 0.3)), 0.0);
        assert!(close(l2(Point2::new(0.5, 0.5), Point2::new(0.8, 0.9)), 0.5));
    }

    #[test]
    fn avg_min_examples() {
        let gts = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)];
        let (avg, min) = avg_min_l2(Point2::new(0.0, 0.0), &gts, AvgMode::PerAnnotation).unwrap();
        assert!(close(avg, 0.5) && close(min, 0.0));
        let (avg, min) = avg_min_l2(Point2::new(0.0, 0.0), &gts, AvgMode::Centroid).unwrap();
        assert!(close(avg, 0.5) && close(min, 0.0));
        let one = [Point2::new(0.2, 0.7)];
        let (avg, min) = avg_min_l2(Point2::new(0.9, 0.1), &one, AvgMode::PerAnnotation).unwrap();
        assert_eq!(avg, min);
        assert!(avg_min_l2(Point2::CENTER, &[], AvgMode::PerAnnotation).is_err());
    }

    #[test]
    fn angular_examples() {
        let head = HeadBox::new(0.4, 0.4, 0.6, 0.6).unwrap();
        let right = angular_error(&head, Point2::new(1.0, 0.5), &[Point2::new(0.5, 1.0)]).unwrap();
        assert!(close(right, 90.0));
        let along = angular_error(&head, Point2::new(0.6, 0.6), &[Point2::new(0.9, 0.9)]).unwrap();
        assert!(close(along, 0.0));
        let back = angular_error(&head, Point2::new(0.3, 0.3), &[Point2::new(0.7, 0.7)]).unwrap();
        assert!(close(back, 180.0));
        assert!(matches!(
            angular_error(&head, Point2::CENTER, &[Point2::new(0.9, 0.9)]),
            Err(Error::DegenerateDirection)
        ));
    }
}
