//! Golden prompt renders and their fixture files.

use gazebench_core::corpus::{DatasetId, SocialTask};
use gazebench_core::prompting::{
    render_probe_prompt, render_prompt, CoordScale, ExemplarBank, PromptSpec, PromptTarget,
    PromptTask, Strategy,
};
use gazebench_core::Point2;

use super::{gaze, hb, social};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/prompts");

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{FIXTURES}/{name}.txt")).unwrap()
}

pub fn slug(s: Strategy) -> &'static str {
    match s {
        Strategy::PrBase => "base",
        Strategy::PrCoTBase => "cot_base",
        Strategy::PrCoTStruct => "cot_struct",
        Strategy::PrInContextCoT => "in_context",
    }
}

pub fn render_gfo(strategy: Strategy) -> String {
    let s = gaze(
        "q",
        DatasetId::GF,
        hb(0.25, 0.1, 0.5, 0.5),
        vec![Point2::new(0.7, 0.7)],
    );
    let bank = ExemplarBank::bundled();
    let spec = PromptSpec::new(PromptTask::GFo, strategy, CoordScale::Unit);
    render_prompt(&spec, PromptTarget::Gaze(&s), Some(&bank))
        .unwrap()
        .transcript()
}

pub fn render_laeo(strategy: Strategy) -> String {
    let p = social(
        "q",
        SocialTask::LAEO,
        true,
        hb(0.1, 0.2, 0.3, 0.4),
        hb(0.6, 0.2, 0.8, 0.4),
    );
    let bank = ExemplarBank::bundled();
    let spec = PromptSpec::new(PromptTask::LAEO, strategy, CoordScale::Unit);
    render_prompt(&spec, PromptTarget::Social(&p), Some(&bank))
        .unwrap()
        .transcript()
}

pub fn render_probe(scale: CoordScale) -> String {
    render_probe_prompt("x.jpg", &hb(0.25, 0.1, 0.5, 0.5), scale)
        .unwrap()
        .transcript()
}

/// Every golden as `(fixture name, fresh render)`.
pub fn all_goldens() -> Vec<(String, String)> {
    let mut out = Vec::new();
    for s in Strategy::ALL {
        out.push((format!("gfo_{}", slug(s)), render_gfo(s)));
        out.push((format!("laeo_{}", slug(s)), render_laeo(s)));
    }
    out.push(("probe_thousand".into(), render_probe(CoordScale::Thousand)));
    out.push(("probe_unit".into(), render_probe(CoordScale::Unit)));
    out
}
