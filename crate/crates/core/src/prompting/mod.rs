//! Prompt rendering for the zero-shot protocols, QA-pair generation and SFT export.

mod coords;
mod exemplars;
mod qa;
mod render;
mod sft;
pub mod templates;

pub use coords::{format_box, format_point, format_value, CoordScale};
pub use exemplars::{Exemplar, ExemplarBank};
pub use qa::{
    build_gaze_qa, build_qa_pairs, build_social_qa, epoch_seed, phrase_person, phrase_with,
    question_bank, sa_questions, sample_question, PersonPhrase, QAPair, QaSource, QueryKind,
    TemplateIds, GAZE_POINT_QUESTIONS, INOUT_QUESTIONS, LAEO_QUESTIONS, LAH_QUESTIONS,
    ONE_PERSON_PHRASES, PERSONS_NOUNS, PERSON_NOUNS, TWO_PERSON_PHRASES,
};
pub use render::{
    render_boxes, render_probe_prompt, render_probe_prompt_with, render_prompt, Message, Part,
    PromptSpec, PromptTarget, PromptTask, RenderedPrompt, Role, Strategy,
};
pub use sft::{export_sft, sft_lines, SftFormat, SftSummary};
