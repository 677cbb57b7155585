//! Evaluation metrics for gaze following and social gaze prediction.

mod aggregate;
mod classification;
mod distance;
mod prediction;
mod report;

pub use aggregate::{average_of_n, best_of_n, best_of_n_distance};
pub use classification::{average_precision, prf1, Prf1};
pub use distance::{angular_error, avg_min_l2, l2, AvgMode, DEGENERATE_EPS};
pub use prediction::{DecodeTag, ParseStatus, PredictionRecord, PredictionTask};
pub use report::{
    build_report, empty_report, report_fingerprint, GazeRow, MetricsReport, ReportConfig, SocialRow,
};

/// Pairwise (cascade) summation. Callers pass values in canonical order so
/// the result is reproducible bit-for-bit.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(pairwise_sum(values) / values.len() as f64)
    }
}
