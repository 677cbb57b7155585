//! Acceptance criteria 1-10, each checked offline against the mock backend
//! and independent oracles. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails or exceeds its time limit.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::oracles::{ap_oracle, nearest};
use gazebench_core::corpus::{
    generate_probe_negatives, sample_balanced_pairs, subsample_frames, ImageSize, Record,
    SamplingConfig, SocialTask,
};
use gazebench_core::gateway::{target_dims, MockBehavior, ResizeMode};
use gazebench_core::harness::{build_gateway, run_eval_on, run_probe_on, RunConfig, RunStatus};
use gazebench_core::metrics::{
    angular_error, average_of_n, average_precision, best_of_n, best_of_n_distance, l2,
    PredictionRecord,
};
use gazebench_core::parsing::{parse_gaze_joint, parse_social};
use gazebench_core::prompting::{CoordScale, Strategy};
use gazebench_core::{Error, HeadBox, Point2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Tolerances.
const AP_TOL: f64 = 1e-12;
const GEOM_TOL: f64 = 1e-9;
const METRIC_TOL: f64 = 1e-9;
const ASPECT_TOL: f64 = 0.01;
const PIXEL_CAP: u64 = 200_704;

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn c1_prompt_fidelity() {
    let goldens = common::goldens::all_goldens();
    assert!(goldens.len() >= 9);
    for (name, rendered) in &goldens {
        assert_eq!(rendered, &common::goldens::fixture(name), "{name}");
    }
}

fn c2_parser() {
    assert!(common::parser_cases::check_fixtures() >= 30);
    let g = parse_gaze_joint("I cannot tell.", CoordScale::Unit).prediction;
    assert_eq!((g.p_io, g.point), (Some(0.5), Some(Point2::new(0.5, 0.5))));
    assert_eq!(
        parse_social("", SocialTask::LAEO).prediction.p_sg,
        Some(0.5)
    );
    assert_eq!(common::parser_cases::fuzz(100_000, 2024), 100_000);
}

fn c3_metric_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..10_000 {
        let n = rng.random_range(1..=12);
        let scores: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0..6) as f64 / 5.0)
            .collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        match ap_oracle(&scores, &labels) {
            Some(want) => {
                assert!((average_precision(&scores, &labels).unwrap() - want).abs() <= AP_TOL)
            }
            None => assert!(matches!(
                average_precision(&scores, &labels),
                Err(Error::ApUndefined)
            )),
        }
    }
    for n in 1..=12usize {
        let scores: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        for mask in 1u32..(1 << n) {
            let labels: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            let want = ap_oracle(&scores, &labels).unwrap();
            assert!((average_precision(&scores, &labels).unwrap() - want).abs() <= AP_TOL);
        }
    }
    let pt = |rng: &mut ChaCha8Rng| Point2::new(rng.random(), rng.random());
    for _ in 0..10_000 {
        let (p, q, r) = (pt(&mut rng), pt(&mut rng), pt(&mut rng));
        assert_eq!(l2(p, p), 0.0);
        assert!((l2(p, q) - l2(q, p)).abs() <= GEOM_TOL);
        assert!(l2(p, r) <= l2(p, q) + l2(q, r) + GEOM_TOL);
        assert!((l2(p, q) - nearest((p.x, p.y), &[(q.x, q.y)])).abs() <= GEOM_TOL);
    }
    // A head at the origin of a quarter turn: the answer is 90 degrees.
    let head = HeadBox::new(0.4, 0.4, 0.6, 0.6).unwrap();
    for _ in 0..1_000 {
        let (dx, dy) = (rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4));
        if f64::hypot(dx, dy) < 1e-3 {
            continue;
        }
        let a = Point2::new(0.5 + dx, 0.5 + dy);
        let b = Point2::new(0.5 - dy, 0.5 + dx);
        assert!((angular_error(&head, a, &[b]).unwrap() - 90.0).abs() <= GEOM_TOL);
        assert!(
            (angular_error(&head, a, &[b]).unwrap() - angular_error(&head, b, &[a]).unwrap()).abs()
                <= GEOM_TOL
        );
        assert!(angular_error(&head, a, &[a]).unwrap().abs() <= GEOM_TOL);
    }
}

fn mock_run(behavior: MockBehavior, records: &[Record]) -> gazebench_core::harness::RunOutcome {
    let mut cfg = RunConfig::default();
    cfg.model.mock = Some(behavior);
    cfg.prompt.strategy = Strategy::PrCoTStruct;
    let gw = build_gateway(&cfg, records).unwrap();
    let out = run_eval_on(&cfg, records, &gw).unwrap();
    assert_eq!(out.status, RunStatus::Complete);
    out
}

fn c4_end_to_end() {
    let records = common::synthetic_corpus(140, 60, 404);
    assert_eq!(records.len(), 200);
    let echo = mock_run(MockBehavior::EchoGt, &records).report;
    for row in &echo.gaze {
        assert_eq!(row.avg_l2, Some(0.0));
        assert_eq!(row.min_l2, Some(0.0));
        assert_eq!(row.ang_err_deg, Some(0.0));
    }
    let offset = mock_run(MockBehavior::FixedOffset { dx: 0.1, dy: 0.0 }, &records).report;
    for row in &offset.gaze {
        assert!((row.avg_l2.unwrap() - 0.1).abs() <= METRIC_TOL, "{row:?}");
    }
    let biased = mock_run(MockBehavior::BiasedSg { p: 0.5 }, &records).report;
    assert_eq!(biased.social.len(), 3);
    for row in &biased.social {
        assert!((row.recall - 1.0).abs() <= METRIC_TOL);
        assert!((row.precision - 0.5).abs() <= METRIC_TOL);
        assert!((row.f1 - 2.0 / 3.0).abs() <= METRIC_TOL);
    }
}

fn c5_sampling() {
    let cfg = |seed| SamplingConfig {
        rng_seed: seed,
        ..SamplingConfig::default()
    };
    for seed in 0..100 {
        let (pos, neg) = common::random_social_pool(seed);
        let (out, _) = sample_balanced_pairs(&pos, &neg, &cfg(seed)).unwrap();
        for task in SocialTask::ALL {
            let p = out.iter().filter(|x| x.task == task && x.label).count();
            let n = out.iter().filter(|x| x.task == task && !x.label).count();
            assert_eq!(p, n, "seed {seed} {task}");
        }
        let again = sample_balanced_pairs(&pos, &neg, &cfg(seed)).unwrap().0;
        assert_eq!(
            serde_json::to_vec(&out).unwrap(),
            serde_json::to_vec(&again).unwrap()
        );
    }
    for frames in 1..40u64 {
        let kept = subsample_frames(&common::video_frames(4, frames), 3).unwrap();
        let mut per_video: BTreeMap<String, u64> = BTreeMap::new();
        for s in &kept {
            *per_video
                .entry(s.image_ref.split('/').next().unwrap().to_string())
                .or_default() += 1;
        }
        assert_eq!(per_video.len(), 4);
        assert!(per_video.values().all(|&c| c == frames.div_ceil(3)));
    }
}

fn c6_image_prep() {
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let cap = ResizeMode::CapTotal(PIXEL_CAP);
    for _ in 0..10_000 {
        let (w, h) = (rng.random_range(1..=8192u32), rng.random_range(1..=8192u32));
        let (w2, h2) = target_dims(w, h, cap).unwrap();
        assert!(w2 as u64 * h2 as u64 <= PIXEL_CAP);
        let dev = ((w2 as f64 / h2 as f64) / (w as f64 / h as f64) - 1.0).abs();
        assert!(dev <= ASPECT_TOL, "{w}x{h} -> {w2}x{h2}");
    }
    assert_eq!(target_dims(896, 896, cap).unwrap(), (448, 448));
    assert_eq!(target_dims(1280, 720, cap).unwrap(), (597, 336));
}

fn c7_qa_round_trip() {
    let records = common::synthetic_corpus(4_000, 6_000, 77);
    assert!(common::qa::round_trip(&records) >= 10_000);
    let pairs = common::qa::one_pair_each(&common::synthetic_corpus(500, 500, 78), 1000);
    assert_eq!(pairs.len(), 1000);
    let changed = common::qa::epoch_changes(&pairs, 7);
    assert!(changed >= 900, "{changed} of 1000 changed");
}

fn c8_aggregation() {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    for _ in 0..1_000 {
        let gts: Vec<Point2> = (0..rng.random_range(1..5))
            .map(|_| Point2::new(rng.random(), rng.random()))
            .collect();
        let pool: Vec<PredictionRecord> = (0..16)
            .map(|i| {
                PredictionRecord::gaze("s", 0.5, Point2::new(rng.random(), rng.random()))
                    .with_tag(0.7, i)
            })
            .collect();
        let mut prev = f64::INFINITY;
        for n in 1..=pool.len() {
            let d = best_of_n_distance(&best_of_n(&pool[..n], &gts).unwrap(), &gts).unwrap();
            assert!(d <= prev);
            prev = d;
        }
    }
    let preds: Vec<_> = [(0.1, 0.9), (0.3, 0.5), (0.8, 0.1)]
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            PredictionRecord::gaze("s", 0.2, Point2::new(x, y)).with_tag(0.7, i as u32)
        })
        .collect();
    let c = average_of_n(&preds).unwrap().point.unwrap();
    assert!((c.x - 0.4).abs() <= AP_TOL && (c.y - 0.5).abs() <= AP_TOL);
}

fn c9_probe() {
    let heads = [
        HeadBox::new(0.1, 0.1, 0.2, 0.25).unwrap(),
        HeadBox::new(0.4, 0.05, 0.5, 0.2).unwrap(),
        HeadBox::new(0.7, 0.6, 0.85, 0.8).unwrap(),
    ];
    for seed in 0..500 {
        let boxes =
            generate_probe_negatives("img.jpg", &heads, ImageSize::new(640, 480), seed).unwrap();
        for b in boxes.iter().filter(|b| !b.is_positive) {
            for h in &heads {
                let w = b.bbox.x_max().min(h.x_max()) - b.bbox.x_min().max(h.x_min());
                let v = b.bbox.y_max().min(h.y_max()) - b.bbox.y_min().max(h.y_min());
                assert!(
                    w <= 0.0 || v <= 0.0,
                    "seed {seed}: {:?} meets {h:?}",
                    b.bbox
                );
            }
        }
    }
    let records = common::probe_corpus(40);
    let boxes: Vec<_> = records
        .iter()
        .filter_map(|r| match r {
            Record::Probe(p) => Some(p.clone()),
            _ => None,
        })
        .collect();
    let mut cfg = RunConfig::default();
    cfg.model.mock = Some(MockBehavior::AlwaysYes);
    let report = run_probe_on(&cfg, &boxes, &build_gateway(&cfg, &records).unwrap()).unwrap();
    assert_eq!(report.rows.len(), 2);
    for row in &report.rows {
        assert_eq!(row.accuracy, 0.5);
        assert_eq!(row.sensitivity, Some(1.0));
    }
}

fn c10_resume() {
    let records = common::synthetic_corpus(60, 30, 1010);
    let mut cfg = RunConfig::default();
    cfg.model.mock = Some(MockBehavior::Jitter { sigma: 0.04 });
    cfg.decode.temperature = 0.0;
    let reference = {
        let gw = build_gateway(&cfg, &records).unwrap();
        run_eval_on(&cfg, &records, &gw).unwrap()
    };
    assert_eq!(reference.status, RunStatus::Complete);
    let dir = tempfile::tempdir().unwrap();
    cfg.cache_dir = Some(dir.path().to_path_buf());
    cfg.stop_after = Some(37);
    let partial = run_eval_on(&cfg, &records, &build_gateway(&cfg, &records).unwrap()).unwrap();
    assert_eq!(partial.status, RunStatus::Partial);
    cfg.stop_after = None;
    let resumed = run_eval_on(&cfg, &records, &build_gateway(&cfg, &records).unwrap()).unwrap();
    assert_eq!(resumed.status, RunStatus::Complete);
    assert_eq!(resumed.manifest.counters.cache_hits, 37);
    assert_eq!(
        resumed.report.to_json().unwrap(),
        reference.report.to_json().unwrap()
    );
    assert_eq!(
        resumed.report.to_csv().unwrap(),
        reference.report.to_csv().unwrap()
    );
    assert_eq!(resumed.report.to_markdown(), reference.report.to_markdown());
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn(), Duration); 10] = [
        ("1 prompt fidelity", c1_prompt_fidelity, secs(1)),
        ("2 parser fixtures and fuzzing", c2_parser, secs(10)),
        ("3 metric oracles", c3_metric_oracles, secs(30)),
        ("4 end-to-end mock runs", c4_end_to_end, secs(60)),
        ("5 sampling invariants", c5_sampling, secs(10)),
        ("6 image preparation", c6_image_prep, secs(10)),
        ("7 QA round trip", c7_qa_round_trip, secs(30)),
        ("8 aggregation", c8_aggregation, secs(10)),
        ("9 probe pipeline", c9_probe, secs(10)),
        ("10 resumability", c10_resume, secs(60)),
    ];
    let mut failed = Vec::new();
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check));
        let took = start.elapsed();
        let verdict = match (&outcome, took <= limit) {
            (Ok(()), true) => "PASS",
            (Ok(()), false) => "FAIL (time limit)",
            (Err(_), _) => "FAIL",
        };
        println!(
            "criterion {name}: {verdict} [{:.3} s, limit {} s]",
            took.as_secs_f64(),
            limit.as_secs()
        );
        if verdict != "PASS" {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
