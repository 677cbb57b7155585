use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gazebench_core::corpus::{
    filter_social_annotations, generate_probe_corpus, ingest_gaze_annotations, load_rows,
    read_records, sample_balanced_pairs, subsample_frames, ColumnMapping, DatasetId, EventInterval,
    ImageSizeLookup, ProbeImage, Record, SamplingConfig, SocialPair,
};
use gazebench_core::gateway::{MockBehavior, ModelEndpoint, ResizeMode};
use gazebench_core::harness::{
    compose_ft_dataset, export_ft_plan, load_corpus, report_from_predictions, run_eval, run_probe,
    write_bundle, Aggregation, FtOptions, FtStrategy, RunConfig,
};
use gazebench_core::metrics::{report_fingerprint, PredictionRecord, ReportConfig};
use gazebench_core::prompting::{
    build_qa_pairs, export_sft, render_probe_prompt_with, render_prompt, CoordScale, ExemplarBank,
    PromptSpec, PromptTarget, PromptTask, QaSource, SftFormat, Strategy,
};

/// Writes to stdout, ignoring a closed pipe (e.g. `| head`).
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

macro_rules! outp {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = write!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Parser)]
#[command(
    name = "gazebench",
    version,
    about = "Gaze-following and social-gaze evaluation for vision-language models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert raw gaze annotations into canonical corpus records.
    Ingest(IngestArgs),
    /// Filter and balance social-gaze pairs.
    SampleSg(SampleSgArgs),
    /// Export SFT question-answer conversations.
    GenQa(GenQaArgs),
    /// Build the head-localization probe corpus.
    GenProbe(GenProbeArgs),
    /// Evaluate a model (or mock) on gaze following and social gaze.
    RunEval(RunArgs),
    /// Run the head-localization probe.
    RunProbe(RunArgs),
    /// Rebuild a report from saved predictions.
    Report(ReportArgs),
    /// Print a rendered prompt transcript.
    RenderPrompt(RenderArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// CSV (with header) or JSON-lines annotation rows.
    #[arg(long)]
    input: PathBuf,
    /// TOML column mapping.
    #[arg(long)]
    mapping: PathBuf,
    /// Overrides the dataset named in the mapping.
    #[arg(long)]
    dataset: Option<DatasetId>,
    /// `image,width,height` CSV of image dimensions.
    #[arg(long)]
    sizes: Option<PathBuf>,
    /// Directory for reading dimensions from image headers.
    #[arg(long)]
    image_root: Option<PathBuf>,
    /// Keep every k-th frame of video datasets.
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SampleSgArgs {
    /// Corpus with labelled social pairs (positives and candidate negatives).
    #[arg(long)]
    input: PathBuf,
    /// JSON map of pair id to gaze event intervals `[{"start", "end"}]`.
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    stride: usize,
    #[arg(long, default_value_t = 0.0005)]
    min_head_area: f64,
    #[arg(long, default_value_t = 2)]
    boundary_margin: u64,
    #[arg(long, default_value_t = 1.0)]
    negatives_per_positive: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenQaArgs {
    #[arg(long)]
    input: PathBuf,
    /// Output JSONL file, or a directory when `--strategy` is given.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "thousand")]
    scale: CoordScale,
    #[arg(long, default_value_t = 1)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "plain")]
    format: SftFormat,
    /// Fine-tuning composition: ftspec_stage1, ftspec_stage2(DATASET:TASK),
    /// alld_gfo, alld_gfo_sg.
    #[arg(long)]
    strategy: Option<FtStrategy>,
    /// Exact number of QA pairs per stage.
    #[arg(long)]
    subsample: Option<usize>,
}

#[derive(Args)]
struct GenProbeArgs {
    /// Corpus whose gaze records provide the annotated heads.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus files (replace the configured list).
    #[arg(long)]
    corpus: Vec<PathBuf>,
    #[arg(long)]
    dataset: Vec<DatasetId>,
    #[arg(long)]
    task: Vec<PromptTask>,
    #[arg(long)]
    strategy: Option<Strategy>,
    #[arg(long)]
    scale: Option<CoordScale>,
    /// OpenAI-compatible base URL, e.g. http://localhost:8000/v1.
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Scripted backend: echo_gt, fixed_offset(dx,dy), malformed, refuse,
    /// biased_sg(p), always_yes, jitter(sigma).
    #[arg(long)]
    mock: Option<MockBehavior>,
    #[arg(long)]
    parallel: Option<usize>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    max_tokens: Option<u32>,
    #[arg(long)]
    aggregation: Option<Aggregation>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    resize: Option<ResizeMode>,
    #[arg(long)]
    image_root: Option<PathBuf>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Stop after this many samples; the rest stay pending.
    #[arg(long)]
    stop_after: Option<usize>,
    #[arg(long)]
    take_first_n: Option<usize>,
    /// N positive and N negative social pairs per (dataset, task), seeded.
    #[arg(long)]
    balanced_subset: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    corpus: Vec<PathBuf>,
    /// Run configuration supplying metric conventions and provenance.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    task: PromptTask,
    #[arg(long, default_value = "incontext")]
    strategy: Strategy,
    #[arg(long, default_value = "thousand")]
    scale: CoordScale,
    #[arg(long)]
    decimals: Option<u32>,
    /// Corpus holding the record to render.
    #[arg(long)]
    corpus: PathBuf,
    /// Record id; defaults to the first record matching the task.
    #[arg(long)]
    id: Option<String>,
    /// Directory with a custom `exemplars.json`.
    #[arg(long)]
    exemplars: Option<PathBuf>,
    /// Print the message list as JSON instead of a transcript.
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    // Usage errors exit with 1; 2 is reserved for partial runs.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::SampleSg(a) => sample_sg(a),
        Command::GenQa(a) => gen_qa(a),
        Command::GenProbe(a) => gen_probe(a),
        Command::RunEval(a) => run_eval_cmd(a),
        Command::RunProbe(a) => run_probe_cmd(a),
        Command::Report(a) => report(a),
        Command::RenderPrompt(a) => render(a),
    }
}

fn write_corpus(path: &Path, records: &[Record]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    gazebench_core::corpus::write_records(path, records)?;
    Ok(())
}

fn ingest(a: IngestArgs) -> Result<u8> {
    let mut mapping = ColumnMapping::load(&a.mapping)?;
    if let Some(ds) = a.dataset {
        mapping.dataset = ds;
    }
    let mut sizes = match &a.sizes {
        Some(p) => ImageSizeLookup::load_csv(p)?,
        None => ImageSizeLookup::default(),
    };
    sizes.root = a.image_root;
    let rows = load_rows(&a.input)?;
    let outcome = ingest_gaze_annotations(&rows, &mapping, &sizes);
    let samples = match a.stride {
        Some(stride) => subsample_frames(&outcome.samples, stride)?,
        None => outcome.samples,
    };
    let records: Vec<Record> = samples.into_iter().map(Record::from).collect();
    write_corpus(&a.out, &records)?;
    for r in &outcome.rejections {
        eprintln!("rejected row {}: {}", r.row, r.reason);
    }
    out!(
        "{}",
        serde_json::json!({
            "rows": rows.len(),
            "samples": records.len(),
            "rejected": outcome.rejections.len(),
        })
    );
    Ok(0)
}

fn sample_sg(a: SampleSgArgs) -> Result<u8> {
    let cfg = SamplingConfig {
        frame_stride: a.stride,
        min_head_area_frac: a.min_head_area,
        boundary_margin_frames: a.boundary_margin,
        negatives_per_positive: a.negatives_per_positive,
        rng_seed: a.seed,
    };
    cfg.validate()?;
    let pairs: Vec<SocialPair> = read_records(&a.input)?
        .into_iter()
        .filter_map(|r| match r {
            Record::Social(p) => Some(p),
            _ => None,
        })
        .collect();
    let events: Option<HashMap<String, Vec<EventInterval>>> = match &a.events {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Some(serde_json::from_str(&text).context("parsing event intervals")?)
        }
        None => None,
    };
    let strided = if pairs.iter().all(|p| p.frame_index.is_some()) {
        subsample_frames(&pairs, a.stride)?
    } else {
        pairs
    };
    let (kept, filter) = filter_social_annotations(&strided, events.as_ref(), &cfg);
    let (positives, negatives): (Vec<_>, Vec<_>) = kept.into_iter().partition(|p| p.label);
    let (balanced, report) = sample_balanced_pairs(&positives, &negatives, &cfg)?;
    let records: Vec<Record> = balanced.into_iter().map(Record::from).collect();
    write_corpus(&a.out, &records)?;
    out!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({"filter": filter, "sampling": report}))?
    );
    Ok(0)
}

fn gen_qa(a: GenQaArgs) -> Result<u8> {
    let records = read_records(&a.input)?;
    if let Some(strategy) = a.strategy {
        let opts = FtOptions {
            seed: a.seed,
            coord_scale: a.scale,
            subsample: a.subsample,
        };
        let plan = compose_ft_dataset(strategy, &records, &opts)?;
        export_ft_plan(&plan, &a.out, a.epochs, a.format)?;
        out!("{}", serde_json::to_string_pretty(&plan)?);
        return Ok(0);
    }
    if a.subsample.is_some() {
        bail!("--subsample needs --strategy");
    }
    let mut pairs = Vec::new();
    for r in &records {
        let source = match r {
            Record::Gaze(g) => QaSource::Gaze(g),
            Record::Social(p) => QaSource::Social(p),
            Record::Probe(_) => continue,
        };
        pairs.extend(build_qa_pairs(source, a.seed, a.scale)?);
    }
    let summary = export_sft(&pairs, a.epochs, a.seed, &a.out, a.format)?;
    out!("{}", serde_json::to_string(&summary)?);
    Ok(0)
}

fn gen_probe(a: GenProbeArgs) -> Result<u8> {
    let mut images: BTreeMap<String, ProbeImage> = BTreeMap::new();
    for r in read_records(&a.input)? {
        if let Record::Gaze(g) = r {
            let entry = images
                .entry(g.image_ref.clone())
                .or_insert_with(|| ProbeImage {
                    image_ref: g.image_ref.clone(),
                    image_size: g.image_size,
                    heads: Vec::new(),
                });
            if !entry.heads.contains(&g.head) {
                entry.heads.push(g.head);
            }
        }
    }
    if images.is_empty() {
        bail!("no gaze records with heads in {}", a.input.display());
    }
    let images: Vec<ProbeImage> = images.into_values().collect();
    let boxes = generate_probe_corpus(&images, a.seed)?;
    let records: Vec<Record> = boxes.into_iter().map(Record::from).collect();
    write_corpus(&a.out, &records)?;
    out!(
        "{}",
        serde_json::json!({"images": images.len(), "boxes": records.len()})
    );
    Ok(0)
}

fn load_config(a: &RunArgs, probe: bool) -> Result<RunConfig> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => {
            let mut cfg = RunConfig::default();
            if probe {
                cfg.image.resize = ResizeMode::LongestSide(448);
            }
            cfg
        }
    };
    if !a.corpus.is_empty() {
        cfg.data.corpus = a.corpus.clone();
    }
    if !a.dataset.is_empty() {
        cfg.data.datasets = a.dataset.clone();
    }
    if !a.task.is_empty() {
        cfg.tasks = a.task.clone();
    }
    if let Some(v) = a.strategy {
        cfg.prompt.strategy = v;
    }
    if let Some(v) = a.scale {
        cfg.prompt.coord_scale = v;
        if probe {
            cfg.probe_scales = vec![v];
        }
    }
    if let Some(v) = a.mock {
        cfg.model.mock = Some(v);
    }
    if a.endpoint.is_some() || a.model.is_some() {
        let previous = cfg.model.endpoint.take();
        let mut endpoint = previous.unwrap_or_else(|| ModelEndpoint::new("", ""));
        if let Some(url) = &a.endpoint {
            endpoint.base_url = url.clone();
        }
        if let Some(m) = &a.model {
            endpoint.model_name = m.clone();
        }
        if endpoint.base_url.is_empty() || endpoint.model_name.is_empty() {
            bail!("an endpoint needs both --endpoint and --model");
        }
        cfg.model.endpoint = Some(endpoint);
        if a.mock.is_none() {
            cfg.model.mock = None;
        }
    }
    if let Some(v) = a.parallel {
        match cfg.model.endpoint.as_mut() {
            Some(e) => e.max_parallel_requests = v,
            None => bail!("--parallel applies to HTTP endpoints only"),
        }
    }
    if let Some(v) = a.temperature {
        cfg.decode.temperature = v;
    }
    if let Some(v) = a.n {
        cfg.decode.n_samples = v;
    }
    if let Some(v) = a.max_tokens {
        cfg.decode.max_new_tokens = v;
    }
    if let Some(v) = a.aggregation {
        cfg.aggregation = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
        cfg.decode.seed = Some(v);
    }
    if let Some(v) = a.resize {
        cfg.image.resize = v;
    }
    if let Some(v) = &a.image_root {
        cfg.image.root = v.clone();
    }
    if let Some(v) = &a.cache_dir {
        cfg.cache_dir = Some(v.clone());
    }
    if let Some(v) = a.stop_after {
        cfg.stop_after = Some(v);
    }
    if let Some(v) = a.take_first_n {
        cfg.data.take_first_n = Some(v);
    }
    if let Some(v) = a.balanced_subset {
        cfg.data.balanced_subset = Some(v);
    }
    if let Some(v) = &a.out {
        cfg.output_dir = v.clone();
    }
    if cfg.data.corpus.is_empty() {
        bail!("no corpus given (use --corpus or data.corpus in the config)");
    }
    Ok(cfg)
}

fn run_eval_cmd(a: RunArgs) -> Result<u8> {
    let cfg = load_config(&a, false)?;
    let outcome = run_eval(&cfg)?;
    write_bundle(&outcome, &cfg.output_dir)?;
    let c = &outcome.manifest.counters;
    eprintln!(
        "{} of {} samples done ({} failed, {} pending); {} requests, {} cache hits, {} fallbacks -> {}",
        c.done,
        c.selected,
        c.failed,
        c.pending,
        c.requests,
        c.cache_hits,
        c.fallbacks,
        cfg.output_dir.display()
    );
    outp!("{}", outcome.report.to_markdown());
    Ok(outcome.status.exit_code() as u8)
}

fn run_probe_cmd(a: RunArgs) -> Result<u8> {
    let mut cfg = load_config(&a, true)?;
    cfg.tasks.clear();
    let report = run_probe(&cfg)?;
    report.write(&cfg.output_dir)?;
    outp!("{}", report.to_markdown());
    Ok(0)
}

fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), i + 1))
        })
        .collect()
}

fn report(a: ReportArgs) -> Result<u8> {
    let cfg = a.config.as_deref().map(RunConfig::load).transpose()?;
    let corpus_paths = match (&cfg, a.corpus.is_empty()) {
        (_, false) => a.corpus.clone(),
        (Some(c), true) => c.data.corpus.clone(),
        (None, true) => bail!("no corpus given"),
    };
    let corpus = load_corpus(&corpus_paths)?;
    let predictions = read_predictions(&a.predictions)?;
    let mut report_cfg = ReportConfig::default();
    if let Some(c) = &cfg {
        report_cfg.avg_mode = c.metrics.avg_mode;
        report_cfg.threshold = c.metrics.threshold;
        if let serde_json::Value::Object(m) = c.fingerprint_fields() {
            report_cfg.fingerprint = m.into_iter().collect();
        }
        report_cfg
            .fingerprint
            .insert("run_fingerprint".into(), c.fingerprint().into());
    }
    report_fingerprint(&report_cfg)?;
    let report = report_from_predictions(&predictions, &corpus, &report_cfg)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    std::fs::write(a.out.join("report.json"), report.to_json()?)?;
    std::fs::write(a.out.join("report.csv"), report.to_csv()?)?;
    std::fs::write(a.out.join("report.md"), report.to_markdown())?;
    outp!("{}", report.to_markdown());
    Ok(0)
}

fn render(a: RenderArgs) -> Result<u8> {
    let records = read_records(&a.corpus)?;
    let wanted = |r: &Record| match (&a.id, a.task) {
        (Some(id), _) => r.id() == id,
        (None, PromptTask::GFo) => matches!(r, Record::Gaze(_)),
        (None, PromptTask::Probe) => matches!(r, Record::Probe(_)),
        (None, t) => matches!(r, Record::Social(p) if Some(p.task) == t.social_task()),
    };
    let record = records
        .iter()
        .find(|r| wanted(r))
        .context("no matching record in the corpus")?;
    let prompt = match record {
        Record::Probe(p) => {
            if a.task != PromptTask::Probe {
                bail!("record `{}` is a probe box", p.probe_id);
            }
            let decimals = a.decimals.unwrap_or(a.scale.default_decimals());
            render_probe_prompt_with(&p.image_ref, &p.bbox, a.scale, decimals)?
        }
        other => {
            let target = match other {
                Record::Gaze(g) => PromptTarget::Gaze(g),
                Record::Social(p) => PromptTarget::Social(p),
                Record::Probe(_) => unreachable!(),
            };
            let mut spec = PromptSpec::new(a.task, a.strategy, a.scale);
            spec.decimals = a.decimals;
            let bank = match (&a.exemplars, a.strategy) {
                (Some(dir), _) => Some(ExemplarBank::load(dir)?),
                (None, Strategy::PrInContextCoT) => Some(ExemplarBank::bundled()),
                (None, _) => None,
            };
            render_prompt(&spec, target, bank.as_ref())?
        }
    };
    if a.json {
        out!("{}", serde_json::to_string_pretty(&prompt)?);
    } else {
        out!("{}", prompt.transcript());
    }
    Ok(0)
}
