use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use gazebench_core::corpus::SocialTask;
use gazebench_core::parsing::{parse_gaze_joint, parse_social};
use gazebench_core::prompting::CoordScale;

const WELL_FORMED: &str =
    "### Gaze Point ###\n```json\n[{\"inout\": 0.9, \"gaze_point\": [412, 233]}]\n```";

const REASONING: &str = "Step 1: the person at the marked box faces left.\n\
Step 2: their head tilts down toward the table.\n\
Step 3: a cup sits near the left edge.\n\
```json\n[{\"inout\": 1.0, \"gaze_point\": [0.2, 0.6]}]\n```\n\
### Gaze Point ###\n```json\n[{\"inout\": 0.95, \"gaze_point\": [0.21, 0.62]}]\n```";

const TRUNCATED: &str = "### Gaze Point ###\n```json\n[{\"inout\": 0.8, \"gaze_point\": [0.3, 0.";

fn gaze(c: &mut Criterion) {
    c.bench_function("parse_gaze_joint/well_formed", |b| {
        b.iter(|| parse_gaze_joint(black_box(WELL_FORMED), CoordScale::Thousand))
    });
    c.bench_function("parse_gaze_joint/reasoning_two_blocks", |b| {
        b.iter(|| parse_gaze_joint(black_box(REASONING), CoordScale::Unit))
    });
    c.bench_function("parse_gaze_joint/truncated", |b| {
        b.iter(|| parse_gaze_joint(black_box(TRUNCATED), CoordScale::Unit))
    });
    let prose = "I am unable to determine where this person is looking. ".repeat(40);
    c.bench_function("parse_gaze_joint/prose_2kb", |b| {
        b.iter(|| parse_gaze_joint(black_box(&prose), CoordScale::Unit))
    });
}

fn social(c: &mut Criterion) {
    let text = "### Social Gaze Label ###\n```json\n[{\"label\": 0.0}]\n```";
    c.bench_function("parse_social/well_formed", |b| {
        b.iter(|| parse_social(black_box(text), SocialTask::LAEO))
    });
}

criterion_group!(benches, gaze, social);
criterion_main!(benches);
