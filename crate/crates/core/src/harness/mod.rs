//! Episodic training with validation-loss checkpoint selection, the
//! repeat-averaged subject evaluation, cross-subject cross-validation and
//! cross-dataset evaluation.

mod ablation;
mod crossval;
mod eval;
mod report;
pub mod stats;
mod train;

pub use ablation::{probe_corrupted_support, CorruptionProbe};
pub use crossval::{
    cross_dataset_eval, cross_validate, evaluate_all_k, fold_seed, CrossValConfig, CrossValReport, DatasetEvalReport, FoldResult, KSummary,
};
pub use eval::{evaluate_subject, EvalConfig, QueryPrediction, RepeatResult, SubjectReport};
pub use report::{format_mean_std, write_crossval_csv, write_json, LogWriter, FLAT_HEADER};
pub use train::{lr_at, train, LogRecord, TrainConfig, TrainOutcome};

use std::path::PathBuf;

use thiserror::Error;

use crate::data::DataError;
use crate::model::ModelError;
use crate::numcore::NumError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid training configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("training diverged at iteration {iteration} (lr {lr:e}): loss is {loss}")]
    Diverged { iteration: u64, lr: f64, loss: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<HarnessError>,
    },
}
