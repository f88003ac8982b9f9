//! Evaluation orchestration: multi-run comparisons with ratio assertions,
//! the terminal annotation loop for human ratings, and their aggregation.

mod aggregate;
mod annotate;
mod compare;

use std::path::PathBuf;

pub use aggregate::{aggregate_annotations, average_cells, render_table, round2, AnnotationReport, CellMeans, ModelSummary};
pub use annotate::{
    annotate, load_session, sample_tasks, tasks_from, AnnotateOutcome, AnnotationRecord, AnnotationTask, SampleSpec, Score,
};
pub use compare::{
    compare_runs, compare_scores, report_scores, Assertion, AssertionOutcome, CmpOp, Comparison, RunManifest, RunScores, RunSet,
    METRICS,
};

use crate::corpus::LengthBucket;
use crate::jsonl::JsonlError;
use crate::metrics::MetricError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("comparison needs at least 2 runs, got {0}")]
    TooFewRuns(usize),
    #[error("run id `{0}` is used twice")]
    DuplicateRun(String),
    #[error("run `{0}` must give exactly one of predictions, scores, score_file")]
    RunSource(String),
    #[error("run `{0}` has predictions but no reference file")]
    NoReference(String),
    #[error("run `{run_id}`: cannot read {}: {source}", path.display())]
    RunFile {
        run_id: String,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("run `{run_id}`: unknown metric `{metric}`")]
    UnknownMetric { run_id: String, metric: String },
    #[error("run `{run_id}`: {source}")]
    Metric {
        run_id: String,
        #[source]
        source: MetricError,
    },
    #[error("assertion `{expr}`: {reason}")]
    Assertion { expr: String, reason: String },
    #[error("score {0} outside 1..=5")]
    ScoreRange(u32),
    #[error("sample spec `{0}` must be three comma-separated counts")]
    SampleSpec(String),
    #[error("bucket {bucket:?} has {available} items, {wanted} requested")]
    BucketTooSmall {
        bucket: LengthBucket,
        wanted: usize,
        available: usize,
    },
    #[error("prediction for unknown item {0}")]
    UnknownItem(String),
    #[error("{path}: {err}", path = .0.display(), err = .1)]
    Io(PathBuf, #[source] std::io::Error),
    #[error("{path}: {err}", path = .0.display(), err = .1)]
    Json(PathBuf, #[source] serde_json::Error),
    #[error("{path}: {err}", path = .0.display(), err = .1)]
    Records(PathBuf, #[source] JsonlError),
}
