mod common;

use common::goldens::{fixture, render_gfo, render_laeo, render_probe, slug};
use common::{gaze, hb};
use gazebench_core::corpus::DatasetId;
use gazebench_core::prompting::{
    render_prompt, CoordScale, PromptSpec, PromptTarget, PromptTask, Strategy,
};
use gazebench_core::Point2;

#[test]
fn gaze_following_renders_match_fixtures() {
    for s in Strategy::ALL {
        assert_eq!(render_gfo(s), fixture(&format!("gfo_{}", slug(s))), "{s:?}");
    }
}

#[test]
fn social_gaze_renders_match_fixtures() {
    for s in Strategy::ALL {
        assert_eq!(
            render_laeo(s),
            fixture(&format!("laeo_{}", slug(s))),
            "{s:?}"
        );
    }
}

#[test]
fn probe_renders_match_fixtures() {
    for (scale, name) in [
        (CoordScale::Thousand, "probe_thousand"),
        (CoordScale::Unit, "probe_unit"),
    ] {
        assert_eq!(render_probe(scale), fixture(name));
    }
}

#[test]
fn rendering_is_deterministic_and_hash_tracks_content() {
    let a = render_gfo(Strategy::PrCoTStruct);
    assert_eq!(a, render_gfo(Strategy::PrCoTStruct));
    let s = gaze(
        "q",
        DatasetId::GF,
        hb(0.25, 0.1, 0.5, 0.5),
        vec![Point2::new(0.7, 0.7)],
    );
    let spec = PromptSpec::new(PromptTask::GFo, Strategy::PrBase, CoordScale::Unit);
    let h1 = render_prompt(&spec, PromptTarget::Gaze(&s), None)
        .unwrap()
        .template_hash;
    let spec2 = PromptSpec::new(PromptTask::GFo, Strategy::PrBase, CoordScale::Thousand);
    let h2 = render_prompt(&spec2, PromptTarget::Gaze(&s), None)
        .unwrap()
        .template_hash;
    assert_ne!(h1, h2);
}

#[test]
fn in_context_without_bank_is_an_error() {
    let s = gaze(
        "q",
        DatasetId::GF,
        hb(0.25, 0.1, 0.5, 0.5),
        vec![Point2::new(0.7, 0.7)],
    );
    let spec = PromptSpec::new(PromptTask::GFo, Strategy::PrInContextCoT, CoordScale::Unit);
    assert!(render_prompt(&spec, PromptTarget::Gaze(&s), None).is_err());
}

#[test]
fn task_and_target_must_agree() {
    let s = gaze(
        "q",
        DatasetId::GF,
        hb(0.25, 0.1, 0.5, 0.5),
        vec![Point2::new(0.7, 0.7)],
    );
    let spec = PromptSpec::new(PromptTask::LAEO, Strategy::PrBase, CoordScale::Unit);
    assert!(render_prompt(&spec, PromptTarget::Gaze(&s), None).is_err());
}
