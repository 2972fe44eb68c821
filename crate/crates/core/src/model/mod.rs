//! The attention relation network: band-split convolutional embedding,
//! per-support attention scores, class representatives and a learned
//! relation head, plus checkpoint persistence.

mod checkpoint;
mod config;
mod network;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, Checkpoint, CheckpointHeader, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{AttentionConfig, EmbeddingConfig, ModelConfig, RelationConfig, RelationMode};
pub use network::{episode_loss, EpisodeForward, EpisodeTarget, Heads, RelationNetwork, RelationOutput, LOG_FLOOR};

use std::path::PathBuf;

use thiserror::Error;

use crate::data::DataError;
use crate::dsp::DspError;
use crate::numcore::NumError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
