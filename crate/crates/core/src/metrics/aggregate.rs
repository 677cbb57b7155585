//! Aggregation of several stochastic samples of the same query.

use super::distance::l2;
use super::prediction::{DecodeTag, ParseStatus, PredictionRecord};
use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Distance from a prediction to the closest annotation.
pub fn best_of_n_distance(pred: &PredictionRecord, gts: &[Point2]) -> Result<f64> {
    let point = pred
        .point
        .ok_or_else(|| Error::MissingPoint(pred.sample_id.clone()))?;
    if gts.is_empty() {
        return Err(Error::InvalidInput("no ground-truth gaze points".into()));
    }
    Ok(gts
        .iter()
        .map(|g| l2(point, *g))
        .fold(f64::INFINITY, f64::min))
}

/// Oracle selection: the sample closest to any annotation, ties going to the
/// lowest sample index. This uses ground truth and is an upper bound.
pub fn best_of_n(preds: &[PredictionRecord], gts: &[Point2]) -> Result<PredictionRecord> {
    let first = preds.first().ok_or(Error::NoRecords)?;
    if let Some(p) = preds.iter().find(|p| p.sample_id != first.sample_id) {
        return Err(Error::HeterogeneousTasks(format!(
            "samples `{}` and `{}` mixed",
            first.sample_id, p.sample_id
        )));
    }
    let mut best: Option<(&PredictionRecord, f64)> = None;
    for pred in preds {
        let d = best_of_n_distance(pred, gts)?;
        let better = match best {
            None => true,
            Some((b, bd)) => {
                d < bd || (d == bd && pred.decode_tag.sample_index < b.decode_tag.sample_index)
            }
        };
        if better {
            best = Some((pred, d));
        }
    }
    Ok(best.expect("non-empty").0.clone())
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<Option<f64>> {
    let collected: Vec<Option<f64>> = values.collect();
    if collected.iter().all(Option::is_none) {
        return Some(None);
    }
    let vals: Option<Vec<f64>> = collected.into_iter().collect();
    vals.map(|v| super::mean(&v))
}

/// Coordinate-wise mean of points and arithmetic means of probabilities.
pub fn average_of_n(preds: &[PredictionRecord]) -> Result<PredictionRecord> {
    let first = preds.first().ok_or(Error::NoRecords)?;
    if let Some(p) = preds.iter().find(|p| p.task != first.task) {
        return Err(Error::HeterogeneousTasks(format!(
            "{} and {}",
            first.task, p.task
        )));
    }
    let partial = || Error::InvalidInput("some samples lack a field others carry".into());
    let p_io = mean_of(preds.iter().map(|p| p.p_io)).ok_or_else(partial)?;
    let p_sg = mean_of(preds.iter().map(|p| p.p_sg)).ok_or_else(partial)?;
    let xs = mean_of(preds.iter().map(|p| p.point.map(|q| q.x))).ok_or_else(partial)?;
    let ys = mean_of(preds.iter().map(|p| p.point.map(|q| q.y))).ok_or_else(partial)?;
    let point = xs.zip(ys).map(|(x, y)| Point2::new(x, y));

    let status = if preds.iter().all(|p| p.parse_status == ParseStatus::Ok) {
        ParseStatus::Ok
    } else if preds
        .iter()
        .any(|p| p.parse_status == ParseStatus::Fallback)
    {
        ParseStatus::Fallback
    } else {
        ParseStatus::Clamped
    };
    Ok(PredictionRecord {
        sample_id: first.sample_id.clone(),
        task: first.task,
        p_io,
        point,
        p_sg,
        parse_status: status,
        decode_tag: DecodeTag {
            temperature: first.decode_tag.temperature,
            sample_index: 0,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SocialTask;

    fn at(x: f64, y: f64, idx: u32) -> PredictionRecord {
        PredictionRecord::gaze("s", 0.5, Point2::new(x, y)).with_tag(0.7, idx)
    }

    #[test]
    fn best_picks_closest() {
        let gt = [Point2::new(0.5, 0.5)];
        let preds = vec![at(0.8, 0.5, 0), at(0.55, 0.5, 1), at(0.5, 0.7, 2)];
        assert_eq!(best_of_n(&preds, &gt).unwrap().decode_tag.sample_index, 1);
        assert_eq!(best_of_n(&preds[..1], &gt).unwrap(), preds[0]);
    }

    #[test]
    fn best_ties_go_to_lowest_index() {
        let gt = [Point2::new(0.5, 0.5)];
        let preds = vec![at(0.6, 0.5, 3), at(0.4, 0.5, 1)];
        assert_eq!(best_of_n(&preds, &gt).unwrap().decode_tag.sample_index, 1);
    }

    #[test]
    fn best_requires_points() {
        let p = PredictionRecord::social("s", SocialTask::SA, 0.3);
        assert!(matches!(
            best_of_n(&[p], &[Point2::CENTER]),
            Err(Error::MissingPoint(_))
        ));
    }

    #[test]
    fn average_examples() {
        let avg = average_of_n(&[at(0.0, 0.0, 0), at(1.0, 1.0, 1)]).unwrap();
        assert_eq!(avg.point, Some(Point2::new(0.5, 0.5)));

        let mut preds = vec![at(0.1, 0.2, 0), at(0.1, 0.2, 1), at(0.1, 0.2, 2)];
        for (p, v) in preds.iter_mut().zip([0.2, 0.8, 0.5]) {
            p.p_io = Some(v);
        }
        let avg = average_of_n(&preds).unwrap();
        assert!((avg.p_io.unwrap() - 0.5).abs() < 1e-12);
        let p = avg.point.unwrap();
        assert!((p.x - 0.1).abs() < 1e-15 && (p.y - 0.2).abs() < 1e-15);
    }

    #[test]
    fn average_rejects_mixed_tasks() {
        let a = at(0.1, 0.1, 0);
        let b = PredictionRecord::social("s", SocialTask::LAEO, 0.5);
        assert!(matches!(
            average_of_n(&[a, b]),
            Err(Error::HeterogeneousTasks(_))
        ));
    }

    #[test]
    fn average_status_degrades() {
        let a = at(0.1, 0.1, 0);
        let b = at(0.1, 0.1, 1).with_status(ParseStatus::Fallback);
        assert_eq!(
            average_of_n(&[a, b]).unwrap().parse_status,
            ParseStatus::Fallback
        );
    }
}
