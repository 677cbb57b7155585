//! Run configuration, evaluation and probe runs, and fine-tuning dataset
//! composition.

mod config;
mod ft;
mod probe;
mod run;

pub use config::{
    Aggregation, DataSelection, ImageConfig, MetricConfig, ModelConfig, PromptConfig, RunConfig,
    HARNESS_VERSION,
};
pub use ft::{
    compose_ft_dataset, export_ft_plan, FtOptions, FtPlan, FtStrategy, FtTarget, StagePlan,
};
pub use probe::{
    run_probe, run_probe_on, setting_name, HistogramBin, ProbeAnswer, ProbeReport, ProbeRow,
    HISTOGRAM_BIN,
};
pub use run::{
    build_gateway, load_corpus, report_from_predictions, run_eval, run_eval_on, select_records,
    write_bundle, RunCounters, RunManifest, RunOutcome, RunStatus, SampleState,
};
