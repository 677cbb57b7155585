mod common;

use common::oracles::{ap_oracle, nearest};
use gazebench_core::corpus::SocialTask;
use gazebench_core::metrics::{
    angular_error, average_of_n, average_precision, avg_min_l2, best_of_n, best_of_n_distance, l2,
    prf1, AvgMode, PredictionRecord,
};
use gazebench_core::{Error, HeadBox, Point2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXACT: f64 = 1e-12;
const GEOM: f64 = 1e-9;

#[test]
fn ap_matches_oracle_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 10_000 {
        let n = rng.random_range(1..=12);
        // Coarse scores so ties are common.
        let scores: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0..6) as f64 / 5.0)
            .collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        match ap_oracle(&scores, &labels) {
            Some(want) => {
                let got = average_precision(&scores, &labels).unwrap();
                assert!((got - want).abs() <= EXACT, "{scores:?} {labels:?}");
            }
            None => assert!(matches!(
                average_precision(&scores, &labels),
                Err(Error::ApUndefined)
            )),
        }
        checked += 1;
    }
}

#[test]
fn ap_matches_oracle_on_every_labelling() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 1..=12usize {
        let scores: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        for mask in 1u32..(1 << n) {
            let labels: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            let got = average_precision(&scores, &labels).unwrap();
            assert!((got - ap_oracle(&scores, &labels).unwrap()).abs() <= EXACT);
        }
    }
}

#[test]
fn ap_edge_cases() {
    assert_eq!(average_precision(&[0.1, 0.9], &[true, true]).unwrap(), 1.0);
    assert!(average_precision(&[], &[]).is_err());
    assert!(average_precision(&[0.2], &[true, false]).is_err());
}

#[test]
fn prf1_threshold_ties_are_positive() {
    let r = prf1(&[0.5; 4], &[true, false, true, false], 0.5);
    assert_eq!((r.precision, r.recall), (0.5, 1.0));
    assert!((r.f1 - 2.0 / 3.0).abs() <= EXACT);
    let none = prf1(&[0.1, 0.2], &[true, false], 0.5);
    assert!(none.precision_undefined && !none.recall_undefined && none.f1 == 0.0);
}

#[test]
fn right_angle_construction() {
    let head = HeadBox::new(0.4, 0.4, 0.6, 0.6).unwrap();
    let right = Point2::new(0.8, 0.5);
    let down = Point2::new(0.5, 0.9);
    let left = Point2::new(0.1, 0.5);
    assert!((angular_error(&head, right, &[down]).unwrap() - 90.0).abs() <= GEOM);
    assert!((angular_error(&head, right, &[left]).unwrap() - 180.0).abs() <= GEOM);
    assert!(
        angular_error(&head, right, &[Point2::new(0.95, 0.5)])
            .unwrap()
            .abs()
            <= GEOM
    );
    assert!(matches!(
        angular_error(&head, Point2::new(0.5, 0.5), &[down]),
        Err(Error::DegenerateDirection)
    ));
}

#[test]
fn avg_min_hand_computed() {
    let gts = [Point2::new(0.0, 0.0), Point2::new(0.6, 0.8)];
    let p = Point2::new(0.0, 0.0);
    let (avg, min) = avg_min_l2(p, &gts, AvgMode::PerAnnotation).unwrap();
    assert!((avg - 0.5).abs() <= EXACT && min == 0.0);
    let (avg, _) = avg_min_l2(p, &gts, AvgMode::Centroid).unwrap();
    assert!((avg - 0.5).abs() <= EXACT);
}

fn unit_point() -> impl Strategy<Value = Point2> {
    (0.0f64..=1.0, 0.0f64..=1.0).prop_map(|(x, y)| Point2::new(x, y))
}

proptest! {
    #[test]
    fn l2_is_a_metric(p in unit_point(), q in unit_point(), r in unit_point()) {
        prop_assert!(l2(p, q) >= 0.0);
        prop_assert_eq!(l2(p, p), 0.0);
        prop_assert!((l2(p, q) - l2(q, p)).abs() <= GEOM);
        prop_assert!(l2(p, r) <= l2(p, q) + l2(q, r) + GEOM);
        prop_assert!(l2(p, q) <= 2f64.sqrt() + GEOM);
    }

    #[test]
    fn angle_is_symmetric_and_bounded(p in unit_point(), q in unit_point()) {
        let head = HeadBox::new(0.45, 0.45, 0.55, 0.55).unwrap();
        if let (Ok(a), Ok(b)) = (angular_error(&head, p, &[q]), angular_error(&head, q, &[p])) {
            prop_assert!((a - b).abs() <= GEOM);
            prop_assert!((0.0..=180.0).contains(&a));
        }
    }

    #[test]
    fn rotating_by_a_quarter_turn_gives_ninety(dx in -0.4f64..0.4, dy in -0.4f64..0.4) {
        prop_assume!(dx.hypot(dy) > 1e-3);
        let head = HeadBox::new(0.45, 0.45, 0.55, 0.55).unwrap();
        let p = Point2::new(0.5 + dx, 0.5 + dy);
        let q = Point2::new(0.5 - dy, 0.5 + dx);
        prop_assert!((angular_error(&head, p, &[q]).unwrap() - 90.0).abs() <= GEOM);
    }

    #[test]
    fn min_never_exceeds_avg(p in unit_point(), gts in prop::collection::vec(unit_point(), 1..8)) {
        for mode in [AvgMode::PerAnnotation, AvgMode::Centroid] {
            let (avg, min) = avg_min_l2(p, &gts, mode).unwrap();
            if mode == AvgMode::PerAnnotation {
                prop_assert!(min <= avg + GEOM);
            }
            prop_assert!(min >= 0.0 && avg >= 0.0);
        }
    }
}

fn pool(rng: &mut ChaCha8Rng, n: usize) -> Vec<PredictionRecord> {
    (0..n)
        .map(|i| {
            let p = Point2::new(rng.random(), rng.random());
            PredictionRecord::gaze("s", rng.random(), p).with_tag(0.7, i as u32)
        })
        .collect()
}

#[test]
fn best_of_n_is_monotone_in_n() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let gts: Vec<Point2> = (0..rng.random_range(1..5))
            .map(|_| Point2::new(rng.random(), rng.random()))
            .collect();
        let preds = pool(&mut rng, 16);
        let raw_gts: Vec<(f64, f64)> = gts.iter().map(|g| (g.x, g.y)).collect();
        let mut prev = f64::INFINITY;
        for n in 1..=preds.len() {
            let best = best_of_n(&preds[..n], &gts).unwrap();
            let d = best_of_n_distance(&best, &gts).unwrap();
            let want = preds[..n]
                .iter()
                .map(|p| nearest((p.point.unwrap().x, p.point.unwrap().y), &raw_gts))
                .fold(f64::INFINITY, f64::min);
            assert!((d - want).abs() <= EXACT);
            assert!(d <= prev);
            prev = d;
        }
    }
}

#[test]
fn average_of_n_is_the_centroid() {
    let pts = [(0.1, 0.9), (0.3, 0.5), (0.8, 0.1)];
    let preds: Vec<_> = pts
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            PredictionRecord::gaze("s", 0.25 * i as f64, Point2::new(x, y)).with_tag(0.7, i as u32)
        })
        .collect();
    let avg = average_of_n(&preds).unwrap();
    let c = avg.point.unwrap();
    assert!((c.x - 0.4).abs() <= EXACT && (c.y - 0.5).abs() <= EXACT);
    assert!((avg.p_io.unwrap() - 0.25).abs() <= EXACT);

    let social: Vec<_> = [0.2, 0.9]
        .iter()
        .map(|&p| PredictionRecord::social("s", SocialTask::LAH, p))
        .collect();
    assert!((average_of_n(&social).unwrap().p_sg.unwrap() - 0.55).abs() <= EXACT);
}
