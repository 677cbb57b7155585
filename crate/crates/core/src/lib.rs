//! Evaluation harness for gaze following and social gaze prediction with
//! vision-language models.
//!
//! The pipeline runs corpus records through prompt rendering, a
//! chat-completions gateway (or a deterministic mock), answer parsing and
//! metric computation:
//!
//! - [`corpus`]: canonical records, ingestion, balanced social-gaze sampling,
//!   head-localization probe boxes.
//! - [`prompting`]: the four zero-shot prompt protocols, the probe prompt,
//!   QA-pair generation and SFT export.
//! - [`gateway`]: image preparation, response cache, HTTP client, mock
//!   backend and the bounded request pool.
//! - [`parsing`]: JSON answer extraction with fixed fallback defaults.
//! - [`metrics`]: L2 / angular error, AP, precision/recall/F1, Best-of-N and
//!   Average-of-N, report assembly.
//! - [`harness`]: run configuration, evaluation and probe runs, fine-tuning
//!   dataset composition.

pub mod corpus;
pub mod error;
pub mod gateway;
pub mod geometry;
pub mod harness;
pub mod metrics;
pub mod parsing;
pub mod prompting;
pub mod seed;

pub use error::{Error, Result};
pub use geometry::{HeadBox, Point2};
