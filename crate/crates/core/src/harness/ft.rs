use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::corpus::{DatasetId, Record, Split};
use crate::error::{Error, Result};
use crate::prompting::{
    build_qa_pairs, export_sft, CoordScale, PromptTask, QAPair, QaSource, QueryKind, SftFormat,
};
use crate::seed::rng_from;

/// The second-stage target of a specialized fine-tune.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FtTarget {
    pub dataset: DatasetId,
    pub task: PromptTask,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FtStrategy {
    /// Gaze following on GF only.
    FtSpecStage1,
    /// GF gaze following, then the target task on its dataset.
    FtSpecStage2(FtTarget),
    /// Gaze following on GF, VAT and CP.
    AllDGfo,
    /// Gaze following plus all social tasks on GF, VAT and CP, shuffled.
    AllDGfoPlusSg,
}

impl fmt::Display for FtStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FtStrategy::FtSpecStage1 => f.write_str("ftspec_stage1"),
            FtStrategy::FtSpecStage2(t) => write!(f, "ftspec_stage2({}:{})", t.dataset, t.task),
            FtStrategy::AllDGfo => f.write_str("alld_gfo"),
            FtStrategy::AllDGfoPlusSg => f.write_str("alld_gfo_sg"),
        }
    }
}

impl FromStr for FtStrategy {
    type Err = Error;

    /// Accepts `ftspec_stage1`, `ftspec_stage2(VAT:GFo)`, `alld_gfo` and
    /// `alld_gfo_sg`.
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', '/', '+'], "_");
        match norm.as_str() {
            "ftspec_stage1" | "ftspec_stage1_gf" => return Ok(FtStrategy::FtSpecStage1),
            "alld_gfo" => return Ok(FtStrategy::AllDGfo),
            "alld_gfo_sg" | "alld_gfo_plus_sg" | "alld_gfo__sg" => {
                return Ok(FtStrategy::AllDGfoPlusSg)
            }
            _ => {}
        }
        let inner = norm
            .strip_prefix("ftspec_stage2(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| Error::InvalidInput(format!("unknown fine-tuning strategy `{s}`")))?;
        let (ds, task) = inner
            .split_once(':')
            .ok_or_else(|| Error::InvalidInput(format!("expected `dataset:task` in `{s}`")))?;
        let task: PromptTask = task.parse()?;
        if task == PromptTask::Probe {
            return Err(Error::InvalidInput(
                "the probe is not a fine-tuning target".into(),
            ));
        }
        Ok(FtStrategy::FtSpecStage2(FtTarget {
            dataset: ds.parse()?,
            task,
        }))
    }
}

const ALL_DATASETS: [DatasetId; 3] = [DatasetId::GF, DatasetId::VAT, DatasetId::CP];
/// GF carries no social-gaze labels.
const SOCIAL_DATASETS: [DatasetId; 2] = [DatasetId::VAT, DatasetId::CP];
const GAZE_KINDS: [QueryKind; 2] = [QueryKind::Inout, QueryKind::GazePoint];

fn kinds_for(task: PromptTask) -> Vec<QueryKind> {
    match task.social_task() {
        Some(t) => vec![QueryKind::social(t)],
        None => GAZE_KINDS.to_vec(),
    }
}

/// One export stage: which datasets and query kinds it draws from, and the
/// resulting pairs in export order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagePlan {
    pub name: String,
    pub datasets: Vec<DatasetId>,
    pub kinds: Vec<QueryKind>,
    pub n_sources: usize,
    pub n_pairs: usize,
    #[serde(skip)]
    pub pairs: Vec<QAPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FtPlan {
    pub strategy: String,
    pub seed: u64,
    pub coord_scale: CoordScale,
    pub subsample: Option<usize>,
    pub stages: Vec<StagePlan>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FtOptions {
    pub seed: u64,
    pub coord_scale: CoordScale,
    /// Exact number of QA pairs per stage, drawn without replacement.
    pub subsample: Option<usize>,
}

fn stage(
    name: &str,
    records: &[Record],
    datasets: &[DatasetId],
    kinds: &[QueryKind],
    opts: &FtOptions,
) -> Result<StagePlan> {
    let mut pairs = Vec::new();
    let mut n_sources = 0;
    for r in records {
        let (ds, split, source) = match r {
            Record::Gaze(g) => (g.dataset_id, g.split, QaSource::Gaze(g)),
            Record::Social(p) => (p.dataset_id, p.split, QaSource::Social(p)),
            Record::Probe(_) => continue,
        };
        if split != Split::Train || !datasets.contains(&ds) {
            continue;
        }
        let built: Vec<QAPair> = build_qa_pairs(source, opts.seed, opts.coord_scale)?
            .into_iter()
            .filter(|p| kinds.contains(&p.query_kind))
            .collect();
        if !built.is_empty() {
            n_sources += 1;
            pairs.extend(built);
        }
    }
    let present: BTreeSet<DatasetId> = pairs.iter().map(|p| p.dataset_id).collect();
    let missing: Vec<String> = datasets
        .iter()
        .filter(|d| !present.contains(d))
        .map(|d| d.to_string())
        .collect();
    if !missing.is_empty() {
        let kinds: Vec<&str> = kinds.iter().map(|k| k.as_str()).collect();
        return Err(Error::MissingCorpus(format!(
            "stage `{name}` needs train pairs of kind {} from {}",
            kinds.join("/"),
            missing.join(", ")
        )));
    }
    if let Some(n) = opts.subsample {
        if n > pairs.len() {
            return Err(Error::InvalidInput(format!(
                "stage `{name}`: requested {n} pairs, only {} available",
                pairs.len()
            )));
        }
        let mut rng = rng_from(opts.seed, &["ft-subsample", name]);
        let mut idx = index::sample(&mut rng, pairs.len(), n).into_vec();
        idx.sort_unstable();
        pairs = idx.into_iter().map(|i| pairs[i].clone()).collect();
    }
    Ok(StagePlan {
        name: name.to_string(),
        datasets: datasets.to_vec(),
        kinds: kinds.to_vec(),
        n_sources,
        n_pairs: pairs.len(),
        pairs,
    })
}

/// Builds the stage plan for a fine-tuning strategy from train-split records.
pub fn compose_ft_dataset(
    strategy: FtStrategy,
    records: &[Record],
    opts: &FtOptions,
) -> Result<FtPlan> {
    let stages = match strategy {
        FtStrategy::FtSpecStage1 => vec![stage(
            "stage1",
            records,
            &[DatasetId::GF],
            &GAZE_KINDS,
            opts,
        )?],
        FtStrategy::FtSpecStage2(t) => vec![
            stage("stage1", records, &[DatasetId::GF], &GAZE_KINDS, opts)?,
            stage("stage2", records, &[t.dataset], &kinds_for(t.task), opts)?,
        ],
        FtStrategy::AllDGfo => vec![stage("alld", records, &ALL_DATASETS, &GAZE_KINDS, opts)?],
        FtStrategy::AllDGfoPlusSg => {
            let gaze = stage("alld_gaze", records, &ALL_DATASETS, &GAZE_KINDS, opts)?;
            let social_kinds = [QueryKind::Laeo, QueryKind::Lah, QueryKind::Sa];
            let social = stage(
                "alld_social",
                records,
                &SOCIAL_DATASETS,
                &social_kinds,
                opts,
            )?;
            let mut pairs: Vec<QAPair> = gaze.pairs.into_iter().chain(social.pairs).collect();
            pairs.shuffle(&mut rng_from(opts.seed, &["ft-shuffle"]));
            vec![StagePlan {
                name: "alld".into(),
                datasets: ALL_DATASETS.to_vec(),
                kinds: GAZE_KINDS.iter().chain(&social_kinds).copied().collect(),
                n_sources: gaze.n_sources + social.n_sources,
                n_pairs: pairs.len(),
                pairs,
            }]
        }
    };
    Ok(FtPlan {
        strategy: strategy.to_string(),
        seed: opts.seed,
        coord_scale: opts.coord_scale,
        subsample: opts.subsample,
        stages,
    })
}

/// Writes one `{stage}.jsonl` per stage plus `plan.json` into `dir`.
pub fn export_ft_plan(plan: &FtPlan, dir: &Path, epochs: usize, format: SftFormat) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for s in &plan.stages {
        export_sft(
            &s.pairs,
            epochs,
            plan.seed,
            &dir.join(format!("{}.jsonl", s.name)),
            format,
        )?;
    }
    super::run::write_file(
        &dir.join("plan.json"),
        &(serde_json::to_string_pretty(plan)? + "\n"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_names_round_trip() {
        for s in [
            "ftspec_stage1",
            "ftspec_stage2(VAT:LAEO)",
            "alld_gfo",
            "alld_gfo_sg",
        ] {
            let st: FtStrategy = s.parse().unwrap();
            assert_eq!(st.to_string().parse::<FtStrategy>().unwrap(), st);
        }
        assert!("ftspec_stage2(VAT:probe)".parse::<FtStrategy>().is_err());
    }
}
