//! Trials, manifests, cross-subject folds, episodic sampling,
//! augmentation and synthetic data.

mod augment;
mod episode;
mod folds;
mod manifest;
mod split;
pub mod synth;
mod trial;

use std::path::PathBuf;

pub use augment::{augment_frequency_swap, augment_pool, augment_time_recombination, AugmentConfig};
pub use episode::{corrupt_support, sample_training_episode, ClassPools, Episode, EpisodeSpec};
pub use folds::{make_folds, FoldPlan};
pub use manifest::{
    load_dataset, load_manifest, load_trial, parse_manifest, Dataset, DatasetManifest, RejectedTrial, TrialRecord,
    MANIFEST_HEADER,
};
pub use split::{make_test_split, TestSplit, TEST_SUPPORT_PER_CLASS};
pub use synth::{generate_synthetic_dataset, noise_trials, synthesize_trials, SynthConfig};
pub use trial::{format_trial_samples, parse_trial_samples, read_trial_samples, write_trial_samples, Label, Trial, TrialOrigin};

use thiserror::Error;

use crate::dsp::DspError;

/// Samples per trial window (3.5 s at 250 Hz).
pub const TRIAL_SAMPLES: usize = 875;
/// Electrodes per trial: C3, CZ, C4.
pub const N_ELECTRODES: usize = 3;
pub const SAMPLE_RATE_HZ: f64 = 250.0;
pub const ELECTRODE_NAMES: [&str; N_ELECTRODES] = ["C3", "CZ", "C4"];

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("referenced trial file does not exist: {path}")]
    MissingFile { path: PathBuf },
    #[error("invalid trial: {0}")]
    InvalidTrial(String),
    #[error("fold construction: {0}")]
    Fold(String),
    #[error("cannot sample episode: class {class} needs {needed} trials, pool has {available}")]
    InsufficientPool {
        class: usize,
        needed: usize,
        available: usize,
    },
    #[error("cannot split test subject: class {class} needs {needed} trials, has {available}")]
    Split {
        class: usize,
        needed: usize,
        available: usize,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error("{} problems: {}", .0.len(), join_errors(.0))]
    Many(Vec<DataError>),
}

fn join_errors(errors: &[DataError]) -> String {
    errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

impl DataError {
    /// `Ok` for no errors, the error itself for one, `Many` otherwise.
    pub(crate) fn collect(mut errors: Vec<DataError>) -> Result<(), DataError> {
        match errors.len() {
            0 => Ok(()),
            1 => Err(errors.pop().expect("one error")),
            _ => Err(DataError::Many(errors)),
        }
    }

    /// Flattened list of individual problems.
    pub fn problems(&self) -> Vec<String> {
        match self {
            DataError::Many(list) => list.iter().flat_map(DataError::problems).collect(),
            other => vec![other.to_string()],
        }
    }
}
