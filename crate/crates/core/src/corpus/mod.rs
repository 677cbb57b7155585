//! Canonical gaze and social-gaze records, ingestion from tabular sources,
//! balanced social-gaze sampling and head-localization probe generation.

mod ingest;
mod jsonl;
mod probe;
mod records;
mod sampling;

pub use ingest::{
    ingest_gaze_annotations, load_rows, ColumnMapping, Columns, CoordSpace, ImageSizeLookup,
    IngestOutcome, Rejection, SourceRow,
};
pub use jsonl::{read_records, write_records, Record};
pub use probe::{generate_probe_corpus, generate_probe_negatives, ProbeImage, MAX_PLACEMENT_TRIES};
pub use records::{DatasetId, GazeSample, ImageSize, ProbeBox, SocialPair, SocialTask, Split};
pub use sampling::{
    dedup_unordered, filter_social_annotations, sample_balanced_pairs, subsample_frames,
    EventInterval, FilterReport, FrameIndexed, SamplingConfig, SamplingReport, TaskCounts,
};

/// Deterministic take-first-N over canonical ordering.
pub fn take_first_n<T: Clone>(records: &[T], n: Option<usize>) -> Vec<T> {
    match n {
        Some(n) => records.iter().take(n).cloned().collect(),
        None => records.to_vec(),
    }
}
