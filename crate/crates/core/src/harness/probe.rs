use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::run::{build_gateway, load_corpus, write_file};
use crate::corpus::{ProbeBox, Record};
use crate::error::{Error, Result};
use crate::gateway::{run_bounded, DecodeParams, Gateway};
use crate::parsing::parse_yesno;
use crate::prompting::{render_probe_prompt_with, CoordScale};

/// Width of a distance bucket in the answer histogram (unit coordinates).
pub const HISTOGRAM_BIN: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub setting: String,
    pub coord_scale: CoordScale,
    pub n_boxes: usize,
    pub n_positive: usize,
    pub n_negative: usize,
    /// Unparseable answers; scored as incorrect.
    pub n_fallback: usize,
    pub accuracy: f64,
    pub sensitivity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub coord_scale: CoordScale,
    /// `0` for annotated heads, otherwise `(lo, hi]`.
    pub bucket: String,
    pub n_boxes: usize,
    pub n_yes: usize,
    pub yes_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeAnswer {
    pub probe_id: String,
    pub coord_scale: CoordScale,
    pub is_positive: bool,
    pub distance_to_nearest_gt: f64,
    pub answer: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub rows: Vec<ProbeRow>,
    pub histogram: Vec<HistogramBin>,
    pub answers: Vec<ProbeAnswer>,
}

pub fn setting_name(scale: CoordScale) -> &'static str {
    match scale {
        CoordScale::Unit => "Normalized 0-1",
        CoordScale::Thousand => "Normalized 0-1000",
    }
}

fn bucket_of(distance: f64) -> Option<u64> {
    (distance > 0.0).then(|| ((distance / HISTOGRAM_BIN).ceil() as u64).max(1) - 1)
}

fn bucket_label(bucket: Option<u64>) -> String {
    match bucket {
        None => "0".into(),
        Some(k) => format!(
            "({:.2}, {:.2}]",
            k as f64 * HISTOGRAM_BIN,
            (k + 1) as f64 * HISTOGRAM_BIN
        ),
    }
}

fn summarize(scale: CoordScale, answers: &[&ProbeAnswer]) -> ProbeRow {
    let n_positive = answers.iter().filter(|a| a.is_positive).count();
    let correct = answers
        .iter()
        .filter(|a| a.answer == Some(a.is_positive))
        .count();
    let true_pos = answers
        .iter()
        .filter(|a| a.is_positive && a.answer == Some(true))
        .count();
    ProbeRow {
        setting: setting_name(scale).into(),
        coord_scale: scale,
        n_boxes: answers.len(),
        n_positive,
        n_negative: answers.len() - n_positive,
        n_fallback: answers.iter().filter(|a| a.answer.is_none()).count(),
        accuracy: if answers.is_empty() {
            0.0
        } else {
            correct as f64 / answers.len() as f64
        },
        sensitivity: (n_positive > 0).then(|| true_pos as f64 / n_positive as f64),
    }
}

fn histogram(scale: CoordScale, answers: &[&ProbeAnswer]) -> Vec<HistogramBin> {
    let mut bins: std::collections::BTreeMap<Option<u64>, (usize, usize)> = Default::default();
    for a in answers {
        let e = bins.entry(bucket_of(a.distance_to_nearest_gt)).or_default();
        e.0 += 1;
        e.1 += (a.answer == Some(true)) as usize;
    }
    bins.into_iter()
        .map(|(b, (n, yes))| HistogramBin {
            coord_scale: scale,
            bucket: bucket_label(b),
            n_boxes: n,
            n_yes: yes,
            yes_rate: yes as f64 / n as f64,
        })
        .collect()
}

/// Asks the model whether each box contains a head, once per coordinate
/// scale. Decoding always uses a single sample.
pub fn run_probe_on(cfg: &RunConfig, boxes: &[ProbeBox], gateway: &Gateway) -> Result<ProbeReport> {
    if boxes.is_empty() {
        return Err(Error::NoRecords);
    }
    let decode = DecodeParams {
        n_samples: 1,
        ..cfg.decode
    };
    decode.validate()?;
    let scales = if cfg.probe_scales.is_empty() {
        vec![CoordScale::Unit, CoordScale::Thousand]
    } else {
        cfg.probe_scales.clone()
    };
    let mut report = ProbeReport {
        rows: Vec::new(),
        histogram: Vec::new(),
        answers: Vec::new(),
    };
    for scale in scales {
        let decimals = cfg.prompt.decimals.unwrap_or(scale.default_decimals());
        let results = run_bounded(
            boxes,
            gateway.max_parallel(),
            |_, b| -> Result<ProbeAnswer> {
                let prompt = render_probe_prompt_with(&b.image_ref, &b.bbox, scale, decimals)?;
                let responses = gateway.complete(&b.probe_id, &prompt, &decode)?;
                let answer = responses.first().and_then(|r| parse_yesno(&r.text));
                Ok(ProbeAnswer {
                    probe_id: b.probe_id.clone(),
                    coord_scale: scale,
                    is_positive: b.is_positive,
                    distance_to_nearest_gt: b.distance_to_nearest_gt,
                    answer,
                })
            },
        );
        let answers = results.into_iter().collect::<Result<Vec<_>>>()?;
        let refs: Vec<&ProbeAnswer> = answers.iter().collect();
        report.rows.push(summarize(scale, &refs));
        report.histogram.extend(histogram(scale, &refs));
        report.answers.extend(answers);
    }
    Ok(report)
}

pub fn run_probe(cfg: &RunConfig) -> Result<ProbeReport> {
    let all = load_corpus(&cfg.data.corpus)?;
    let boxes: Vec<ProbeBox> = all
        .iter()
        .filter_map(|r| match r {
            Record::Probe(p) => Some(p.clone()),
            _ => None,
        })
        .collect();
    if boxes.is_empty() {
        return Err(Error::MissingCorpus(
            "no probe records in the corpus".into(),
        ));
    }
    let gateway = build_gateway(cfg, &all)?;
    run_probe_on(cfg, &boxes, &gateway)
}

impl ProbeReport {
    pub fn to_markdown(&self) -> String {
        let mut s = String::from(
            "| Setting | Boxes | Accuracy | Sensitivity | Fallbacks |\n|---|---|---|---|---|\n",
        );
        for r in &self.rows {
            let sens = r
                .sensitivity
                .map_or("n/a".to_string(), |v| format!("{:.1}", 100.0 * v));
            let _ = writeln!(
                s,
                "| {} | {} | {:.1} | {} | {} |",
                r.setting,
                r.n_boxes,
                100.0 * r.accuracy,
                sens,
                r.n_fallback
            );
        }
        s
    }

    pub fn rows_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "setting",
            "coord_scale",
            "n_boxes",
            "n_positive",
            "n_negative",
            "n_fallback",
            "accuracy",
            "sensitivity",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.setting.clone(),
                r.coord_scale.to_string(),
                r.n_boxes.to_string(),
                r.n_positive.to_string(),
                r.n_negative.to_string(),
                r.n_fallback.to_string(),
                r.accuracy.to_string(),
                r.sensitivity.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
        csv_string(w)
    }

    pub fn histogram_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["coord_scale", "bucket", "n_boxes", "n_yes", "yes_rate"])?;
        for b in &self.histogram {
            w.write_record([
                b.coord_scale.to_string(),
                b.bucket.clone(),
                b.n_boxes.to_string(),
                b.n_yes.to_string(),
                b.yes_rate.to_string(),
            ])?;
        }
        csv_string(w)
    }

    /// Writes `probe_report.{json,csv,md}` and `probe_histogram.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_file(
            &dir.join("probe_report.json"),
            &(serde_json::to_string_pretty(self)? + "\n"),
        )?;
        write_file(&dir.join("probe_report.csv"), &self.rows_csv()?)?;
        write_file(&dir.join("probe_report.md"), &self.to_markdown())?;
        write_file(&dir.join("probe_histogram.csv"), &self.histogram_csv()?)
    }
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
