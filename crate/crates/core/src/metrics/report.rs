use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::classification::{average_precision, prf1};
use super::distance::{angular_error, avg_min_l2, AvgMode};
use super::prediction::{ParseStatus, PredictionRecord};
use crate::corpus::{DatasetId, GazeSample, Record, SocialPair, SocialTask};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub avg_mode: AvgMode,
    pub threshold: f64,
    /// Free-form provenance (prompt strategy, model, decode params, seeds);
    /// metric conventions are added by [`build_report`].
    pub fingerprint: BTreeMap<String, Value>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            avg_mode: AvgMode::PerAnnotation,
            threshold: 0.5,
            fingerprint: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazeRow {
    pub dataset: DatasetId,
    pub n_samples: usize,
    pub n_fallback: usize,
    /// Samples with an in-frame target and a predicted point.
    pub n_point: usize,
    pub avg_l2: Option<f64>,
    pub min_l2: Option<f64>,
    pub ang_err_deg: Option<f64>,
    /// Excluded from the angular mean: prediction at the head center.
    pub n_degenerate: usize,
    pub n_inout: usize,
    pub ap_inout: Option<f64>,
    pub f1_inout: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocialRow {
    pub dataset: DatasetId,
    pub task: SocialTask,
    pub n_samples: usize,
    pub n_fallback: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incomplete: Option<String>,
    pub fingerprint: BTreeMap<String, Value>,
    pub gaze: Vec<GazeRow>,
    pub social: Vec<SocialRow>,
}

fn count_fallback_samples(records: &[&PredictionRecord]) -> usize {
    records
        .iter()
        .filter(|r| r.parse_status == ParseStatus::Fallback)
        .map(|r| r.sample_id.as_str())
        .collect::<BTreeSet<_>>()
        .len()
}

fn gaze_row(
    dataset: DatasetId,
    rows: &[(&PredictionRecord, &GazeSample)],
    cfg: &ReportConfig,
) -> Result<GazeRow> {
    let records: Vec<&PredictionRecord> = rows.iter().map(|(r, _)| *r).collect();
    let n_samples = records
        .iter()
        .map(|r| r.sample_id.as_str())
        .collect::<BTreeSet<_>>()
        .len();

    let (mut avgs, mut mins, mut angles) = (Vec::new(), Vec::new(), Vec::new());
    let mut n_degenerate = 0;
    let (mut scores, mut labels) = (Vec::new(), Vec::new());
    for (rec, truth) in rows {
        if let Some(point) = rec.point {
            if truth.has_target() {
                let (avg, min) = avg_min_l2(point, &truth.gaze_points, cfg.avg_mode)?;
                avgs.push(avg);
                mins.push(min);
                match angular_error(&truth.head, point, &truth.gaze_points) {
                    Ok(a) => angles.push(a),
                    Err(Error::DegenerateDirection) => n_degenerate += 1,
                    Err(e) => return Err(e),
                }
            }
        }
        if let (Some(p), Some(label)) = (rec.p_io, truth.inout_label) {
            scores.push(p);
            labels.push(label);
        }
    }
    let ap_inout = average_precision(&scores, &labels).ok();
    let f1_inout = (!scores.is_empty() && labels.iter().any(|&l| l))
        .then(|| prf1(&scores, &labels, cfg.threshold).f1);
    Ok(GazeRow {
        dataset,
        n_samples,
        n_fallback: count_fallback_samples(&records),
        n_point: avgs.len(),
        avg_l2: super::mean(&avgs),
        min_l2: super::mean(&mins),
        ang_err_deg: super::mean(&angles),
        n_degenerate,
        n_inout: scores.len(),
        ap_inout,
        f1_inout,
    })
}

fn social_row(
    dataset: DatasetId,
    task: SocialTask,
    rows: &[(&PredictionRecord, &SocialPair)],
    cfg: &ReportConfig,
) -> SocialRow {
    let records: Vec<&PredictionRecord> = rows.iter().map(|(r, _)| *r).collect();
    let probs: Vec<f64> = rows.iter().map(|(r, _)| r.p_sg.unwrap_or(0.5)).collect();
    let labels: Vec<bool> = rows.iter().map(|(_, t)| t.label).collect();
    let m = prf1(&probs, &labels, cfg.threshold);
    SocialRow {
        dataset,
        task,
        n_samples: records
            .iter()
            .map(|r| r.sample_id.as_str())
            .collect::<BTreeSet<_>>()
            .len(),
        n_fallback: count_fallback_samples(&records),
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
        precision_undefined: m.precision_undefined,
        recall_undefined: m.recall_undefined,
    }
}

/// The caller's fingerprint plus the metric conventions in force.
pub fn report_fingerprint(cfg: &ReportConfig) -> Result<BTreeMap<String, Value>> {
    let mut fingerprint = cfg.fingerprint.clone();
    fingerprint.insert("avg_mode".into(), serde_json::to_value(cfg.avg_mode)?);
    fingerprint.insert("threshold".into(), cfg.threshold.into());
    fingerprint.insert("threshold_tie".into(), "positive".into());
    fingerprint.insert("ap_convention".into(), "step, no interpolation".into());
    fingerprint.insert(
        "angular_reference".into(),
        "head center to mean annotation".into(),
    );
    Ok(fingerprint)
}

/// A report with no rows, for runs where no sample completed.
pub fn empty_report(cfg: &ReportConfig, banner: impl Into<String>) -> Result<MetricsReport> {
    Ok(MetricsReport {
        incomplete: Some(banner.into()),
        fingerprint: report_fingerprint(cfg)?,
        gaze: Vec::new(),
        social: Vec::new(),
    })
}

/// Joins predictions to ground truth by id and computes one gaze row per
/// dataset and one social row per (dataset, task).
pub fn build_report(
    records: &[PredictionRecord],
    truth: &BTreeMap<String, Record>,
    cfg: &ReportConfig,
) -> Result<MetricsReport> {
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    let orphans: BTreeSet<&str> = records
        .iter()
        .filter(|r| !truth.contains_key(&r.sample_id))
        .map(|r| r.sample_id.as_str())
        .collect();
    if !orphans.is_empty() {
        return Err(Error::UnmatchedRecords(
            orphans.into_iter().map(String::from).collect(),
        ));
    }

    let mut sorted: Vec<&PredictionRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        a.sample_id
            .cmp(&b.sample_id)
            .then(a.task.cmp(&b.task))
            .then(a.decode_tag.sample_index.cmp(&b.decode_tag.sample_index))
    });

    let mut gaze: BTreeMap<DatasetId, Vec<(&PredictionRecord, &GazeSample)>> = BTreeMap::new();
    let mut social: BTreeMap<(DatasetId, SocialTask), Vec<(&PredictionRecord, &SocialPair)>> =
        BTreeMap::new();
    for rec in sorted {
        match (&truth[&rec.sample_id], rec.task.social_task()) {
            (Record::Gaze(g), None) if rec.task.is_gaze() => {
                gaze.entry(g.dataset_id).or_default().push((rec, g));
            }
            (Record::Social(s), Some(task)) if s.task == task => {
                social
                    .entry((s.dataset_id, task))
                    .or_default()
                    .push((rec, s));
            }
            (other, _) => {
                return Err(Error::InvalidInput(format!(
                    "prediction `{}` ({}) does not match its ground truth ({})",
                    rec.sample_id,
                    rec.task,
                    match other {
                        Record::Gaze(_) => "gaze",
                        Record::Social(_) => "social",
                        Record::Probe(_) => "probe",
                    }
                )))
            }
        }
    }

    let fingerprint = report_fingerprint(cfg)?;

    Ok(MetricsReport {
        incomplete: None,
        fingerprint,
        gaze: gaze
            .iter()
            .map(|(ds, rows)| gaze_row(*ds, rows, cfg))
            .collect::<Result<_>>()?,
        social: social
            .iter()
            .map(|((ds, task), rows)| social_row(*ds, *task, rows, cfg))
            .collect(),
    })
}

const CSV_HEADER: [&str; 19] = [
    "dataset",
    "n_gaze",
    "n_fallback_gaze",
    "Avg L2",
    "Min L2",
    "Ang Err",
    "AP_inout",
    "F1_inout",
    "P_LAH",
    "R_LAH",
    "F1_LAH",
    "P_LAEO",
    "R_LAEO",
    "F1_LAEO",
    "P_SA",
    "R_SA",
    "F1_SA",
    "n_social",
    "n_fallback_social",
];

impl MetricsReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    fn datasets(&self) -> BTreeSet<DatasetId> {
        self.gaze
            .iter()
            .map(|r| r.dataset)
            .chain(self.social.iter().map(|r| r.dataset))
            .collect()
    }

    /// One wide row per dataset, formatted with `fmt` (absent values empty).
    fn wide_rows(
        &self,
        fmt: impl Fn(f64) -> String,
        angle: impl Fn(f64) -> String,
    ) -> Vec<Vec<String>> {
        let opt = |v: Option<f64>| v.map(&fmt).unwrap_or_default();
        self.datasets()
            .into_iter()
            .map(|ds| {
                let mut row = vec![ds.to_string()];
                match self.gaze.iter().find(|r| r.dataset == ds) {
                    Some(g) => row.extend([
                        g.n_samples.to_string(),
                        g.n_fallback.to_string(),
                        opt(g.avg_l2),
                        opt(g.min_l2),
                        g.ang_err_deg.map(&angle).unwrap_or_default(),
                        opt(g.ap_inout),
                        opt(g.f1_inout),
                    ]),
                    None => row.extend(std::iter::repeat_n(String::new(), 7)),
                }
                let (mut n, mut nf) = (0, 0);
                for task in [SocialTask::LAH, SocialTask::LAEO, SocialTask::SA] {
                    match self
                        .social
                        .iter()
                        .find(|r| r.dataset == ds && r.task == task)
                    {
                        Some(s) => {
                            n += s.n_samples;
                            nf += s.n_fallback;
                            row.extend([fmt(s.precision), fmt(s.recall), fmt(s.f1)]);
                        }
                        None => row.extend(std::iter::repeat_n(String::new(), 3)),
                    }
                }
                let has_social = self.social.iter().any(|r| r.dataset == ds);
                row.push(if has_social {
                    n.to_string()
                } else {
                    String::new()
                });
                row.push(if has_social {
                    nf.to_string()
                } else {
                    String::new()
                });
                row
            })
            .collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(CSV_HEADER)?;
        for row in self.wide_rows(|v| format!("{v:.6}"), |v| format!("{v:.6}")) {
            writer.write_record(&row)?;
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        if let Some(banner) = &self.incomplete {
            let _ = writeln!(out, "> **INCOMPLETE RUN**: {banner}\n");
        }
        out.push_str("# Evaluation report\n\n");
        out.push_str("| ");
        out.push_str(&CSV_HEADER.join(" | "));
        out.push_str(" |\n|");
        out.push_str(&"---|".repeat(CSV_HEADER.len()));
        out.push('\n');
        for row in self.wide_rows(|v| format!("{v:.3}"), |v| format!("{v:.1}°")) {
            let _ = writeln!(out, "| {} |", row.join(" | "));
        }
        out.push_str("\n## Configuration\n\n");
        for (k, v) in &self.fingerprint {
            let _ = writeln!(out, "- `{k}`: {v}");
        }
        out
    }
}
