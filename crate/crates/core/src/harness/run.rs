use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{Aggregation, RunConfig, HARNESS_VERSION};
use crate::corpus::{read_records, Record};
use crate::error::{Error, Result};
use crate::gateway::{Backend, DiskCache, Gateway, TruthOracle};
use crate::metrics::{
    average_of_n, best_of_n, build_report, empty_report, MetricsReport, ParseStatus,
    PredictionRecord, ReportConfig,
};
use crate::parsing::{parse_gaze_joint, parse_social, ParseLogEntry};
use crate::prompting::{render_prompt, ExemplarBank, PromptTarget, PromptTask, Strategy};
use crate::seed::rng_from;

/// Reads every corpus file in order.
pub fn load_corpus(paths: &[impl AsRef<Path>]) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    for p in paths {
        out.extend(read_records(p.as_ref())?);
    }
    Ok(out)
}

fn task_of(r: &Record) -> Option<PromptTask> {
    match r {
        Record::Gaze(_) => Some(PromptTask::GFo),
        Record::Social(p) => Some(PromptTask::social(p.task)),
        Record::Probe(_) => None,
    }
}

/// Gaze and social records matching the selection, in corpus order.
/// `balanced_subset` is drawn first, then `take_first_n` applies per
/// (dataset, task).
pub fn select_records(records: &[Record], cfg: &RunConfig) -> Result<Vec<Record>> {
    let sel = &cfg.data;
    let matching: Vec<&Record> = records
        .iter()
        .filter(|r| {
            let Some(task) = task_of(r) else { return false };
            let (ds, split) = match r {
                Record::Gaze(g) => (g.dataset_id, g.split),
                Record::Social(p) => (p.dataset_id, p.split),
                Record::Probe(_) => unreachable!(),
            };
            cfg.tasks.contains(&task)
                && (sel.datasets.is_empty() || sel.datasets.contains(&ds))
                && (sel.splits.is_empty() || sel.splits.contains(&split))
        })
        .collect();
    let keep = match sel.balanced_subset {
        Some(n) => balanced_keep(&matching, n, cfg.seed)?,
        None => vec![true; matching.len()],
    };
    let mut taken: HashMap<(String, PromptTask), usize> = HashMap::new();
    let mut out = Vec::new();
    for (r, keep) in matching.into_iter().zip(keep) {
        if !keep {
            continue;
        }
        let ds = match r {
            Record::Gaze(g) => g.dataset_id,
            Record::Social(p) => p.dataset_id,
            Record::Probe(_) => unreachable!(),
        };
        let n = taken
            .entry((ds.to_string(), task_of(r).expect("filtered")))
            .or_default();
        if sel.take_first_n.is_some_and(|limit| *n >= limit) {
            continue;
        }
        *n += 1;
        out.push(r.clone());
    }
    Ok(out)
}

/// Marks `n` uniformly drawn social pairs per (dataset, task, label).
fn balanced_keep(records: &[&Record], n: usize, seed: u64) -> Result<Vec<bool>> {
    let mut groups: BTreeMap<(String, String, bool), Vec<usize>> = BTreeMap::new();
    let mut keep = vec![true; records.len()];
    for (i, r) in records.iter().enumerate() {
        if let Record::Social(p) = r {
            groups
                .entry((p.dataset_id.to_string(), p.task.to_string(), p.label))
                .or_default()
                .push(i);
            keep[i] = false;
        }
    }
    for ((ds, task, label), idx) in &groups {
        if idx.len() < n {
            return Err(Error::InvalidInput(format!(
                "balanced subset needs {n} {} {ds}/{task} pairs, corpus has {}",
                if *label { "positive" } else { "negative" },
                idx.len()
            )));
        }
        let mut rng = rng_from(seed, &["balanced-subset", ds, task, &label.to_string()]);
        for j in rand::seq::index::sample(&mut rng, idx.len(), n) {
            keep[idx[j]] = true;
        }
    }
    Ok(keep)
}

pub fn build_gateway(cfg: &RunConfig, truth: &[Record]) -> Result<Gateway> {
    let cache = cfg.cache_dir.as_ref().map(DiskCache::new);
    let backend = match (&cfg.model.mock, &cfg.model.endpoint) {
        (Some(behavior), _) => Backend::Mock {
            behavior: *behavior,
            oracle: Arc::new(TruthOracle::from_records(truth)),
            scale: cfg.prompt.coord_scale,
        },
        (None, Some(endpoint)) => {
            Backend::http(endpoint.clone(), cfg.image.resize, cfg.image.root.clone())
        }
        (None, None) => return Err(Error::Config("no endpoint and no mock behavior".into())),
    };
    Ok(Gateway::new(backend, cache))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "error", rename_all = "snake_case")]
pub enum SampleState {
    Done,
    Failed(String),
    Pending,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RunCounters {
    pub selected: usize,
    pub done: usize,
    pub failed: usize,
    pub pending: usize,
    pub responses: u64,
    pub requests: u64,
    pub attempts: u64,
    pub cache_hits: u64,
    pub fallbacks: u64,
    pub clamped: u64,
    pub lenient: u64,
    pub truncated: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub fingerprint: String,
    pub config: Value,
    pub harness_version: String,
    pub samples: BTreeMap<String, SampleState>,
    pub counters: RunCounters,
    pub wall_clock_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    Partial,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Complete => 0,
            RunStatus::Partial => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: MetricsReport,
    pub manifest: RunManifest,
    pub status: RunStatus,
    pub predictions: Vec<PredictionRecord>,
    pub parse_log: Vec<ParseLogEntry>,
}

pub(crate) fn exemplar_bank(cfg: &RunConfig) -> Result<Option<ExemplarBank>> {
    if cfg.prompt.strategy != Strategy::PrInContextCoT {
        return Ok(None);
    }
    Ok(Some(match &cfg.prompt.exemplars {
        Some(dir) => ExemplarBank::load(dir)?,
        None => ExemplarBank::bundled(),
    }))
}

struct SampleResult {
    prediction: PredictionRecord,
    log: Vec<ParseLogEntry>,
}

fn eval_one(
    cfg: &RunConfig,
    gateway: &Gateway,
    bank: Option<&ExemplarBank>,
    record: &Record,
) -> Result<SampleResult> {
    let (target, task) = match record {
        Record::Gaze(g) => (PromptTarget::Gaze(g), PromptTask::GFo),
        Record::Social(p) => (PromptTarget::Social(p), PromptTask::social(p.task)),
        Record::Probe(p) => {
            return Err(Error::InvalidInput(format!(
                "probe record `{}` in an evaluation run",
                p.probe_id
            )))
        }
    };
    let prompt = render_prompt(&cfg.prompt.spec(task), target, bank)?;
    let responses = gateway.complete(record.id(), &prompt, &cfg.decode)?;
    let mut preds = Vec::with_capacity(responses.len());
    let mut log = Vec::with_capacity(responses.len());
    for r in &responses {
        let tag = crate::metrics::DecodeTag {
            temperature: cfg.decode.temperature,
            sample_index: r.sample_index,
        };
        let outcome = match record {
            Record::Social(p) => parse_social(&r.text, p.task),
            _ => parse_gaze_joint(&r.text, cfg.prompt.coord_scale),
        }
        .for_sample(record.id(), tag);
        log.push(outcome.log_entry());
        preds.push(outcome.prediction);
    }
    let prediction = match (cfg.aggregation, record) {
        (Aggregation::None, _) => preds.swap_remove(0),
        (Aggregation::BestOfN, Record::Gaze(g)) if g.has_target() => {
            best_of_n(&preds, &g.gaze_points)?
        }
        _ => average_of_n(&preds)?,
    };
    Ok(SampleResult { prediction, log })
}

/// Evaluates `records` through `gateway`. Samples beyond `stop_after` stay
/// pending; per-sample failures are recorded and do not stop the run.
pub fn run_eval_on(cfg: &RunConfig, records: &[Record], gateway: &Gateway) -> Result<RunOutcome> {
    cfg.validate()?;
    let started = Instant::now();
    let bank = exemplar_bank(cfg)?;
    let limit = cfg.stop_after.unwrap_or(usize::MAX).min(records.len());
    let results = crate::gateway::run_bounded(&records[..limit], gateway.max_parallel(), |_, r| {
        eval_one(cfg, gateway, bank.as_ref(), r)
    });

    let mut samples = BTreeMap::new();
    let mut predictions = Vec::new();
    let mut parse_log = Vec::new();
    let mut counters = RunCounters {
        selected: records.len(),
        ..Default::default()
    };
    for (i, r) in records.iter().enumerate() {
        let state = match results.get(i) {
            None => SampleState::Pending,
            Some(Err(e)) => SampleState::Failed(e.to_string()),
            Some(Ok(res)) => {
                for entry in &res.log {
                    counters.responses += 1;
                    match entry.status {
                        ParseStatus::Fallback => counters.fallbacks += 1,
                        ParseStatus::Clamped => counters.clamped += 1,
                        ParseStatus::Ok => {}
                    }
                    counters.lenient += entry.lenient as u64;
                }
                parse_log.extend(res.log.iter().cloned());
                predictions.push(res.prediction.clone());
                SampleState::Done
            }
        };
        match state {
            SampleState::Done => counters.done += 1,
            SampleState::Failed(_) => counters.failed += 1,
            SampleState::Pending => counters.pending += 1,
        }
        samples.insert(r.id().to_string(), state);
    }
    let stats = gateway.stats();
    counters.requests = stats.requests;
    counters.attempts = stats.attempts;
    counters.cache_hits = stats.cache_hits;
    counters.truncated = stats.truncated;

    let fields = cfg.fingerprint_fields();
    let fingerprint = cfg.fingerprint();
    let mut fp_map: BTreeMap<String, Value> = match &fields {
        Value::Object(m) => m.clone().into_iter().collect(),
        _ => BTreeMap::new(),
    };
    fp_map.insert("run_fingerprint".into(), fingerprint.clone().into());
    let report_cfg = ReportConfig {
        avg_mode: cfg.metrics.avg_mode,
        threshold: cfg.metrics.threshold,
        fingerprint: fp_map,
    };
    let status = if counters.done == counters.selected {
        RunStatus::Complete
    } else {
        RunStatus::Partial
    };
    let banner = (status == RunStatus::Partial).then(|| {
        format!(
            "{} of {} selected samples completed ({} failed, {} pending); see manifest.json",
            counters.done, counters.selected, counters.failed, counters.pending
        )
    });
    let truth: BTreeMap<String, Record> = records
        .iter()
        .map(|r| (r.id().to_string(), r.clone()))
        .collect();
    let report = if predictions.is_empty() {
        empty_report(
            &report_cfg,
            banner.unwrap_or_else(|| "no samples selected".into()),
        )?
    } else {
        let mut report = build_report(&predictions, &truth, &report_cfg)?;
        report.incomplete = banner;
        report
    };
    Ok(RunOutcome {
        report,
        manifest: RunManifest {
            fingerprint,
            config: fields,
            harness_version: HARNESS_VERSION.to_string(),
            samples,
            counters,
            wall_clock_ms: started.elapsed().as_millis() as u64,
        },
        status,
        predictions,
        parse_log,
    })
}

/// Loads the configured corpus, evaluates it and returns the outcome.
pub fn run_eval(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let all = load_corpus(&cfg.data.corpus)?;
    let records = select_records(&all, cfg)?;
    let gateway = build_gateway(cfg, &records)?;
    run_eval_on(cfg, &records, &gateway)
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut text = String::new();
    for item in items {
        text.push_str(&serde_json::to_string(item)?);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `report.{json,csv,md}`, `manifest.json`, `parse_log.jsonl` and
/// `predictions.jsonl` into `dir`.
pub fn write_bundle(outcome: &RunOutcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join("report.json"), &outcome.report.to_json()?)?;
    write_file(&dir.join("report.csv"), &outcome.report.to_csv()?)?;
    write_file(&dir.join("report.md"), &outcome.report.to_markdown())?;
    write_file(
        &dir.join("manifest.json"),
        &(serde_json::to_string_pretty(&outcome.manifest)? + "\n"),
    )?;
    write_jsonl(&dir.join("parse_log.jsonl"), &outcome.parse_log)?;
    write_jsonl(&dir.join("predictions.jsonl"), &outcome.predictions)?;
    Ok(())
}

/// Rebuilds a report from saved predictions and the corpus.
pub fn report_from_predictions(
    predictions: &[PredictionRecord],
    corpus: &[Record],
    cfg: &ReportConfig,
) -> Result<MetricsReport> {
    let truth: BTreeMap<String, Record> = corpus
        .iter()
        .map(|r| (r.id().to_string(), r.clone()))
        .collect();
    build_report(predictions, &truth, cfg)
}
